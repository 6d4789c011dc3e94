//! Lattice probability laws with certified truncations.
//!
//! Every closed-form law in this crate is built from independent Poisson
//! factors: either a plain product over coordinates, or the 3-dimensional
//! law of `(X+Y1, Z, X+Y2)` with a factor `X` shared between the outer
//! coordinates. Empirical laws (normalized occupation measures, mixtures)
//! are sparse atom maps.
//!
//! Each Poisson coordinate is truncated at `mean + 12*sqrt(mean) + 30`,
//! which leaves well under `1e-9` of mass outside the certified box; the
//! actual left-over mass is tracked and reported.

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use std::collections::BTreeMap;
use std::io::Write;

use crate::error::{Error, Result};

/// Truncation cap for a Poisson-like coordinate with the given mean.
fn cap_for_mean(mean: f64) -> u64 {
    (mean + 12.0 * mean.sqrt() + 30.0).ceil() as u64
}

/// Poisson pmf table `p[0..=cap]` by the multiplicative recurrence.
fn poisson_table(lambda: f64, cap: u64) -> Vec<f64> {
    let mut t = Vec::with_capacity(cap as usize + 1);
    let mut p = (-lambda).exp();
    t.push(p);
    for k in 1..=cap {
        p *= lambda / k as f64;
        t.push(p);
    }
    t
}

/// Poisson pmf in log space, usable far beyond any table.
pub(crate) fn poisson_pmf(lambda: f64, k: u64) -> f64 {
    if lambda == 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    let kf = k as f64;
    let mut ln_fact = 0.0;
    for i in 2..=k {
        ln_fact += (i as f64).ln();
    }
    (-lambda + kf * lambda.ln() - ln_fact).exp()
}

fn sample_poisson<R: Rng>(rng: &mut R, lambda: f64) -> u64 {
    if lambda <= 0.0 {
        return 0;
    }
    let d = Poisson::new(lambda).expect("positive finite lambda");
    d.sample(rng) as u64
}

fn check_rate(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParams(format!(
            "{name} must be finite and nonnegative, got {v}"
        )))
    }
}

#[derive(Debug, Clone)]
enum Kind {
    /// Independent Poisson coordinates.
    Product { rates: Vec<f64> },
    /// Law of `(X+Y1, Z, X+Y2)` with independent Poisson factors.
    SharedTriple {
        shared: f64,
        first_extra: f64,
        middle: f64,
        second_extra: f64,
        /// Joint pmf of coordinates (0, 2) over the truncation box.
        conv: Vec<f64>,
        /// pmf table of the middle coordinate.
        mid_table: Vec<f64>,
    },
    /// Sparse probability atoms (empirical laws, mixtures).
    Empirical { atoms: BTreeMap<Vec<u64>, f64> },
}

/// A probability mass function on `ℕ^k` with a certified truncation box,
/// exact moments, and a seeded sampler.
#[derive(Debug, Clone)]
pub struct DiscreteDist {
    dim: usize,
    kind: Kind,
    caps: Vec<u64>,
    mean: Vec<f64>,
    cov: Vec<f64>,
    tail: f64,
}

impl DiscreteDist {
    /// Product of independent Poisson laws with the given means.
    pub fn product(rates: &[f64]) -> Result<Self> {
        if rates.is_empty() {
            return Err(Error::InvalidParams("empty product law".into()));
        }
        for &r in rates {
            check_rate("Poisson mean", r)?;
        }
        let dim = rates.len();
        let caps: Vec<u64> = rates.iter().map(|&r| cap_for_mean(r)).collect();
        let mut cov = vec![0.0; dim * dim];
        for i in 0..dim {
            cov[i * dim + i] = rates[i];
        }
        let mut inside = 1.0;
        for (&r, &c) in rates.iter().zip(&caps) {
            inside *= poisson_table(r, c).iter().sum::<f64>();
        }
        Ok(Self {
            dim,
            kind: Kind::Product {
                rates: rates.to_vec(),
            },
            caps,
            mean: rates.to_vec(),
            cov,
            tail: (1.0 - inside).max(0.0),
        })
    }

    /// Law of `(X+Y1, Z, X+Y2)` with `X ~ Pois(shared)`, `Y1 ~
    /// Pois(first_extra)`, `Z ~ Pois(middle)`, `Y2 ~ Pois(second_extra)`,
    /// all independent. The joint pmf of the outer pair is computed by
    /// summing over the shared factor, exact up to the certified tail.
    pub fn shared_triple(
        shared: f64,
        first_extra: f64,
        middle: f64,
        second_extra: f64,
    ) -> Result<Self> {
        check_rate("shared mean", shared)?;
        check_rate("first mean", first_extra)?;
        check_rate("middle mean", middle)?;
        check_rate("second mean", second_extra)?;
        let m0 = shared + first_extra;
        let m1 = middle;
        let m2 = shared + second_extra;
        let caps = vec![cap_for_mean(m0), cap_for_mean(m1), cap_for_mean(m2)];
        let (c0, c2) = (caps[0] as usize, caps[2] as usize);
        let tx = poisson_table(shared, caps[0].min(caps[2]));
        let ty1 = poisson_table(first_extra, caps[0]);
        let ty2 = poisson_table(second_extra, caps[2]);
        let mid_table = poisson_table(middle, caps[1]);
        let mut conv = vec![0.0; (c0 + 1) * (c2 + 1)];
        for r in 0..=c0 {
            for u in 0..=c2 {
                let amax = r.min(u).min(tx.len() - 1);
                let mut s = 0.0;
                for a in 0..=amax {
                    s += tx[a] * ty1[r - a] * ty2[u - a];
                }
                conv[r * (c2 + 1) + u] = s;
            }
        }
        let inside = conv.iter().sum::<f64>() * mid_table.iter().sum::<f64>();
        let mean = vec![m0, m1, m2];
        let mut cov = vec![0.0; 9];
        cov[0] = m0;
        cov[4] = m1;
        cov[8] = m2;
        cov[2] = shared;
        cov[6] = shared;
        Ok(Self {
            dim: 3,
            kind: Kind::SharedTriple {
                shared,
                first_extra,
                middle,
                second_extra,
                conv,
                mid_table,
            },
            caps,
            mean,
            cov,
            tail: (1.0 - inside).max(0.0),
        })
    }

    /// Law given by explicit probability atoms. `tail` is mass known to sit
    /// outside the atoms (zero for a normalized occupation measure).
    pub fn empirical(atoms: BTreeMap<Vec<u64>, f64>, tail: f64) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::InvalidParams("empirical law with no atoms".into()));
        }
        let dim = atoms.keys().next().unwrap().len();
        let mut total = 0.0;
        let mut caps = vec![0u64; dim];
        for (x, &p) in &atoms {
            if x.len() != dim {
                return Err(Error::DimensionMismatch(
                    "empirical atoms of unequal dimension".into(),
                ));
            }
            if !(p.is_finite() && p >= 0.0) {
                return Err(Error::InvalidParams(format!("atom mass {p}")));
            }
            total += p;
            for (c, &v) in caps.iter_mut().zip(x) {
                *c = (*c).max(v);
            }
        }
        if (total + tail - 1.0).abs() > 1e-6 {
            return Err(Error::InvalidParams(format!(
                "empirical masses sum to {total} (tail {tail}), expected 1"
            )));
        }
        let mut mean = vec![0.0; dim];
        for (x, &p) in &atoms {
            for (m, &v) in mean.iter_mut().zip(x) {
                *m += p * v as f64;
            }
        }
        let mut cov = vec![0.0; dim * dim];
        for (x, &p) in &atoms {
            for i in 0..dim {
                for j in 0..dim {
                    cov[i * dim + j] += p * (x[i] as f64 - mean[i]) * (x[j] as f64 - mean[j]);
                }
            }
        }
        Ok(Self {
            dim,
            kind: Kind::Empirical { atoms },
            caps,
            mean,
            cov,
            tail,
        })
    }

    /// Weighted mixture of laws of equal dimension. Weights are normalized;
    /// the result is an explicit atom map over the union of supports with
    /// the mixed tail mass.
    pub fn mixture(components: &[(f64, &DiscreteDist)]) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidParams("empty mixture".into()));
        }
        let dim = components[0].1.dim;
        let wsum: f64 = components.iter().map(|&(w, _)| w).sum();
        if !wsum.is_finite() || wsum <= 0.0 {
            return Err(Error::InvalidParams("mixture weights sum to zero".into()));
        }
        let mut atoms: BTreeMap<Vec<u64>, f64> = BTreeMap::new();
        let mut tail = 0.0;
        for &(w, d) in components {
            if d.dim != dim {
                return Err(Error::DimensionMismatch(
                    "mixture components of unequal dimension".into(),
                ));
            }
            let w = w / wsum;
            tail += w * d.tail;
            d.for_each_support(|x, p| {
                *atoms.entry(x.to_vec()).or_insert(0.0) += w * p;
            });
        }
        Self::empirical(atoms, tail)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Mean vector (exact for closed forms).
    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    /// Covariance of coordinates `i` and `j` (exact for closed forms).
    pub fn covariance(&self, i: usize, j: usize) -> f64 {
        self.cov[i * self.dim + j]
    }

    /// Inclusive upper corner of the certified truncation box.
    pub fn truncation(&self) -> &[u64] {
        &self.caps
    }

    /// Probability mass outside the certified support.
    pub fn tail_mass(&self) -> f64 {
        self.tail
    }

    /// Pointwise probability mass. Exact anywhere, including outside the
    /// truncation box (closed forms fall back to the log-space formula).
    pub fn pmf(&self, x: &[u64]) -> f64 {
        assert_eq!(x.len(), self.dim, "pmf point of wrong dimension");
        match &self.kind {
            Kind::Product { rates } => rates
                .iter()
                .zip(x)
                .map(|(&r, &k)| poisson_pmf(r, k))
                .product(),
            Kind::SharedTriple {
                shared,
                first_extra,
                middle,
                second_extra,
                conv,
                mid_table,
            } => {
                let (r, l, u) = (x[0], x[1], x[2]);
                let c2 = self.caps[2];
                let pair = if r <= self.caps[0] && u <= c2 {
                    conv[r as usize * (c2 as usize + 1) + u as usize]
                } else {
                    let mut s = 0.0;
                    for a in 0..=r.min(u) {
                        s += poisson_pmf(*shared, a)
                            * poisson_pmf(*first_extra, r - a)
                            * poisson_pmf(*second_extra, u - a);
                    }
                    s
                };
                let mid = if l <= self.caps[1] {
                    mid_table[l as usize]
                } else {
                    poisson_pmf(*middle, l)
                };
                pair * mid
            }
            Kind::Empirical { atoms } => atoms.get(x).copied().unwrap_or(0.0),
        }
    }

    /// Visits the certified support: the full truncation box for closed
    /// forms, the atom set for empirical laws.
    pub fn for_each_support(&self, mut f: impl FnMut(&[u64], f64)) {
        match &self.kind {
            Kind::Empirical { atoms } => {
                for (x, &p) in atoms {
                    f(x, p);
                }
            }
            _ => {
                let mut x = vec![0u64; self.dim];
                self.walk_box(0, &mut x, &mut f);
            }
        }
    }

    fn walk_box(&self, coord: usize, x: &mut Vec<u64>, f: &mut impl FnMut(&[u64], f64)) {
        if coord == self.dim {
            f(x, self.pmf(x));
            return;
        }
        for v in 0..=self.caps[coord] {
            x[coord] = v;
            self.walk_box(coord + 1, x, f);
        }
    }

    /// Draws one sample.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> Vec<u64> {
        match &self.kind {
            Kind::Product { rates } => rates.iter().map(|&r| sample_poisson(rng, r)).collect(),
            Kind::SharedTriple {
                shared,
                first_extra,
                middle,
                second_extra,
                ..
            } => {
                let x = sample_poisson(rng, *shared);
                let y1 = sample_poisson(rng, *first_extra);
                let z = sample_poisson(rng, *middle);
                let y2 = sample_poisson(rng, *second_extra);
                vec![x + y1, z, x + y2]
            }
            Kind::Empirical { atoms } => {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                let mut last = None;
                for (x, &p) in atoms {
                    acc += p;
                    last = Some(x);
                    if u < acc {
                        return x.clone();
                    }
                }
                last.expect("nonempty atoms").clone()
            }
        }
    }

    /// Draws `n` samples with a dedicated seed.
    pub fn sample_n(&self, seed: u64, n: usize) -> Vec<Vec<u64>> {
        let mut rng = crate::rng::rng_from_seed(seed);
        (0..n).map(|_| self.sample(&mut rng)).collect()
    }

    /// Writes `(support point, probability)` rows.
    pub fn write_csv<W: Write + ?Sized>(&self, w: &mut W) -> Result<()> {
        let header: Vec<String> = (1..=self.dim).map(|i| format!("x{i}")).collect();
        writeln!(w, "{},probability", header.join(","))?;
        let mut err = None;
        self.for_each_support(|x, p| {
            if err.is_some() {
                return;
            }
            let cols: Vec<String> = x.iter().map(|v| v.to_string()).collect();
            if let Err(e) = writeln!(w, "{},{p}", cols.join(",")) {
                err = Some(e);
            }
        });
        match err {
            Some(e) => Err(e.into()),
            None => Ok(()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;

    #[test]
    fn product_mass_and_moments() {
        let d = DiscreteDist::product(&[3.0, 0.5]).unwrap();
        assert!(d.tail_mass() < 1e-9);
        assert_eq!(d.mean(), &[3.0, 0.5]);
        assert_eq!(d.covariance(0, 0), 3.0);
        assert_eq!(d.covariance(0, 1), 0.0);
        let mut total = 0.0;
        d.for_each_support(|_, p| total += p);
        assert!((total - 1.0).abs() < 1e-9);
        // pmf(0,0) = exp(-3.5)
        assert!((d.pmf(&[0, 0]) - (-3.5f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn zero_rate_is_point_mass() {
        let d = DiscreteDist::product(&[0.0]).unwrap();
        assert_eq!(d.pmf(&[0]), 1.0);
        assert_eq!(d.pmf(&[1]), 0.0);
        assert_eq!(d.sample(&mut rng_from_seed(1)), vec![0]);
    }

    #[test]
    fn shared_triple_mass_moments_and_consistency() {
        // X,Y1,Y2 ~ Pois(0.5), Z ~ Pois(1).
        let d = DiscreteDist::shared_triple(0.5, 0.5, 1.0, 0.5).unwrap();
        assert!(d.tail_mass() < 1e-9);
        assert_eq!(d.mean(), &[1.0, 1.0, 1.0]);
        assert_eq!(d.covariance(0, 2), 0.5);
        assert_eq!(d.covariance(0, 1), 0.0);
        let mut total = 0.0;
        let mut nonneg = true;
        d.for_each_support(|_, p| {
            total += p;
            nonneg &= p >= 0.0;
        });
        assert!(nonneg);
        assert!((total - 1.0).abs() < 1e-9);
        // pmf(0, l, 0) = P(X=0,Y1=0,Y2=0) * P(Z=l).
        let p = d.pmf(&[0, 2, 0]);
        let want = (-1.5f64).exp() * poisson_pmf(1.0, 2);
        assert!((p - want).abs() < 1e-15);
    }

    #[test]
    fn sampler_obeys_law_of_large_numbers() {
        let d = DiscreteDist::shared_triple(1.0, 0.5, 2.0, 0.25).unwrap();
        let n = 100_000;
        let draws = d.sample_n(77, n);
        for i in 0..3 {
            let m: f64 = draws.iter().map(|x| x[i] as f64).sum::<f64>() / n as f64;
            let sd = d.covariance(i, i).sqrt();
            let tol = 3.0 * sd / (n as f64).sqrt();
            assert!(
                (m - d.mean()[i]).abs() < tol,
                "coord {i}: {m} vs {}",
                d.mean()[i]
            );
        }
    }

    #[test]
    fn empirical_moments_and_sampling() {
        let mut atoms = BTreeMap::new();
        atoms.insert(vec![0u64], 0.25);
        atoms.insert(vec![2u64], 0.75);
        let d = DiscreteDist::empirical(atoms, 0.0).unwrap();
        assert!((d.mean()[0] - 1.5).abs() < 1e-12);
        assert!((d.covariance(0, 0) - 0.75).abs() < 1e-12);
        let n = 40_000;
        let mean: f64 = d.sample_n(5, n).iter().map(|x| x[0] as f64).sum::<f64>() / n as f64;
        assert!((mean - 1.5).abs() < 3.0 * (0.75f64).sqrt() / (n as f64).sqrt());
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            /// The certified truncation always captures the mass budget.
            #[test]
            fn product_mass_is_within_budget(
                rates in proptest::collection::vec(0.0..8.0f64, 1..3),
            ) {
                let d = DiscreteDist::product(&rates).unwrap();
                prop_assert!(d.tail_mass() < 1e-9);
            }

            #[test]
            fn shared_triple_mass_and_moment_identities(
                shared in 0.0..4.0f64,
                y1 in 0.0..4.0f64,
                mid in 0.0..4.0f64,
                y2 in 0.0..4.0f64,
            ) {
                let d = DiscreteDist::shared_triple(shared, y1, mid, y2).unwrap();
                prop_assert!(d.tail_mass() < 1e-9);
                prop_assert!((d.mean()[0] - (shared + y1)).abs() < 1e-12);
                prop_assert!((d.mean()[2] - (shared + y2)).abs() < 1e-12);
                prop_assert!((d.covariance(0, 2) - shared).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn mixture_averages_pmfs() {
        let a = DiscreteDist::product(&[1.0]).unwrap();
        let b = DiscreteDist::product(&[2.0]).unwrap();
        let m = DiscreteDist::mixture(&[(1.0, &a), (1.0, &b)]).unwrap();
        for k in 0..10u64 {
            let want = 0.5 * poisson_pmf(1.0, k) + 0.5 * poisson_pmf(2.0, k);
            assert!((m.pmf(&[k]) - want).abs() < 1e-12);
        }
    }
}
