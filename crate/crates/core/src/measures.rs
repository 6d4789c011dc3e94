//! Occupation measures and distribution distances.
//!
//! An occupation measure assigns to each visited lattice point the total
//! sojourn time a trajectory spends there over a window; normalizing by the
//! window length gives the empirical law of the fast coordinates, which the
//! limit theorems compare against closed-form invariant distributions via
//! total-variation distance on certified truncations.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use crate::error::{Error, Result};
use crate::queues::DiscreteDist;
use crate::ssa::{sample_on_grid, Trajectory};

/// Projection of a state coordinate, optionally as the complement against a
/// conserved total (used for the charged-pair count `U0 - u`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Proj {
    Coord(usize),
    ComplementOf { coord: usize, total: u64 },
}

impl Proj {
    fn apply<const D: usize>(&self, x: &[u64; D]) -> u64 {
        match *self {
            Proj::Coord(i) => x[i],
            Proj::ComplementOf { coord, total } => total - x[coord],
        }
    }
}

/// Time-weighted empirical distribution of a coordinate subset.
#[derive(Debug, Clone, PartialEq)]
pub struct OccupationMeasure {
    pub projection: Vec<Proj>,
    pub window: (f64, f64),
    /// Sojourn time per visited point.
    pub atoms: BTreeMap<Vec<u64>, f64>,
    /// Window length; equals the sum of the atom weights.
    pub total_time: f64,
}

impl OccupationMeasure {
    /// Merges another measure over the same projection by adding sojourn
    /// times (used to pool replicas; addition is associative and
    /// commutative, so pooling order does not matter).
    pub fn merge(&mut self, other: &OccupationMeasure) -> Result<()> {
        if self.projection != other.projection {
            return Err(Error::DimensionMismatch(
                "merging occupation measures over different projections".into(),
            ));
        }
        for (x, w) in &other.atoms {
            *self.atoms.entry(x.clone()).or_insert(0.0) += w;
        }
        self.total_time += other.total_time;
        Ok(())
    }

    /// Writes `(coords..., sojourn, probability)` rows.
    pub fn write_csv<W: Write>(&self, w: &mut W) -> Result<()> {
        let header: Vec<String> = (1..=self.projection.len())
            .map(|i| format!("x{i}"))
            .collect();
        writeln!(w, "{},sojourn,probability", header.join(","))?;
        for (x, weight) in &self.atoms {
            let cols: Vec<String> = x.iter().map(|v| v.to_string()).collect();
            writeln!(
                w,
                "{},{weight},{}",
                cols.join(","),
                weight / self.total_time
            )?;
        }
        Ok(())
    }
}

/// Exact sojourn-time accounting of the projected trajectory over `window`.
///
/// Piecewise-constant integration under the right-continuous convention:
/// the state holds its value on `[event, next event)`.
pub fn occupation<const D: usize>(
    traj: &Trajectory<D>,
    projection: &[Proj],
    window: (f64, f64),
) -> Result<OccupationMeasure> {
    let (t0, t1) = window;
    if !(0.0 <= t0 && t0 <= t1 && t1 <= traj.horizon) {
        return Err(Error::Window(format!(
            "window [{t0}, {t1}] outside [0, {}]",
            traj.horizon
        )));
    }
    if !traj.events_recorded {
        return Err(Error::Window("event log was not recorded".into()));
    }
    let mut atoms: BTreeMap<Vec<u64>, f64> = BTreeMap::new();
    let mut add = |state: &[u64; D], a: f64, b: f64| {
        let overlap = (b.min(t1) - a.max(t0)).max(0.0);
        if overlap > 0.0 {
            let key: Vec<u64> = projection.iter().map(|p| p.apply(state)).collect();
            *atoms.entry(key).or_insert(0.0) += overlap;
        }
    };
    let mut seg_start = 0.0;
    let mut state = traj.initial;
    for e in &traj.events {
        add(&state, seg_start, e.time);
        seg_start = e.time;
        state = e.state;
    }
    add(&state, seg_start, traj.horizon);
    Ok(OccupationMeasure {
        projection: projection.to_vec(),
        window,
        atoms,
        total_time: t1 - t0,
    })
}

/// Normalizes sojourn times into an empirical pmf.
pub fn normalize(om: &OccupationMeasure) -> Result<DiscreteDist> {
    if om.total_time <= 0.0 {
        return Err(Error::Window("zero-length occupation window".into()));
    }
    let atoms: BTreeMap<Vec<u64>, f64> = om
        .atoms
        .iter()
        .map(|(x, w)| (x.clone(), w / om.total_time))
        .collect();
    DiscreteDist::empirical(atoms, 0.0)
}

/// Total-variation distance together with the mass the certified
/// truncations could not account for.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TvReport {
    /// `(1/2) Σ |p - q|` over the union of the certified supports.
    pub distance: f64,
    /// `(1 - Σp) + (1 - Σq)` over the same union: an upper bound on how
    /// much the reported distance could move if the tails were included.
    pub tail_mass: f64,
}

/// Total-variation distance between two laws of equal dimension, summed
/// over the union of their certified supports.
pub fn tv_distance(p: &DiscreteDist, q: &DiscreteDist) -> Result<TvReport> {
    if p.dim() != q.dim() {
        return Err(Error::DimensionMismatch(format!(
            "tv_distance between dimensions {} and {}",
            p.dim(),
            q.dim()
        )));
    }
    let mut points: BTreeSet<Vec<u64>> = BTreeSet::new();
    p.for_each_support(|x, _| {
        points.insert(x.to_vec());
    });
    q.for_each_support(|x, _| {
        points.insert(x.to_vec());
    });
    let mut sum_abs = 0.0;
    let mut mass_p = 0.0;
    let mut mass_q = 0.0;
    for x in &points {
        let a = p.pmf(x);
        let b = q.pmf(x);
        sum_abs += (a - b).abs();
        mass_p += a;
        mass_q += b;
    }
    Ok(TvReport {
        distance: 0.5 * sum_abs,
        tail_mass: (1.0 - mass_p).max(0.0) + (1.0 - mass_q).max(0.0),
    })
}

/// Coordinates divided by `n` at the grid times.
pub fn scaled_path<const D: usize>(
    traj: &Trajectory<D>,
    projection: &[Proj],
    grid: &[f64],
    n: u64,
) -> Result<Vec<Vec<f64>>> {
    let samples = sample_on_grid(traj, grid)?;
    let nf = n as f64;
    Ok(samples
        .iter()
        .map(|(state, _)| {
            projection
                .iter()
                .map(|p| p.apply(state) as f64 / nf)
                .collect()
        })
        .collect())
}
