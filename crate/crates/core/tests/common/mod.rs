//! Shared test oracles.
//!
//! The centerpiece is a truncated-generator stationary solve: enumerate the
//! box `∏ [0, cap_i]`, assemble the jump rates, and run GTH elimination
//! (state reduction with no subtractions, numerically exact to machine
//! precision). Closed-form laws in the library are verified against this
//! solver, never against themselves. Transitions that would leave the box
//! are dropped; the expected escape rate under the solved distribution is
//! returned so tests can confirm the truncation was harmless.

use std::collections::BTreeMap;

use stringent::model::Channel;

/// Stationary distribution of the CTMC restricted to the box, plus the
/// expected boundary-escape rate under that distribution.
pub struct StationarySolution<const D: usize> {
    pub pmf: BTreeMap<[u64; D], f64>,
    #[allow(dead_code)] // read by some test targets only
    pub escape_rate: f64,
}

fn strides<const D: usize>(caps: &[u64; D]) -> [usize; D] {
    let mut s = [0usize; D];
    let mut acc = 1usize;
    for i in (0..D).rev() {
        s[i] = acc;
        acc *= caps[i] as usize + 1;
    }
    s
}

fn unindex<const D: usize>(mut idx: usize, caps: &[u64; D]) -> [u64; D] {
    let mut x = [0u64; D];
    for i in (0..D).rev() {
        let m = caps[i] as usize + 1;
        x[i] = (idx % m) as u64;
        idx /= m;
    }
    x
}

/// Solves `πQ = 0`, `Σπ = 1` on the box by GTH elimination.
pub fn stationary_solve<const D: usize>(
    channels: &[Channel<D>],
    caps: [u64; D],
) -> StationarySolution<D> {
    let stride = strides(&caps);
    let n: usize = caps.iter().map(|&c| c as usize + 1).product();
    // Off-diagonal rate matrix, row-major, plus per-state cut rate.
    let mut q = vec![0.0f64; n * n];
    let mut cut = vec![0.0f64; n];
    for idx in 0..n {
        let x = unindex(idx, &caps);
        for ch in channels {
            let rate = ch.propensity(&x);
            if rate <= 0.0 {
                continue;
            }
            match ch.apply(&x) {
                Some(y) if (0..D).all(|i| y[i] <= caps[i]) => {
                    let j: usize = (0..D).map(|i| y[i] as usize * stride[i]).sum();
                    q[idx * n + j] += rate;
                }
                _ => cut[idx] += rate,
            }
        }
    }

    // GTH elimination: remove states n-1 .. 1, remembering each row sum.
    let mut row_sum = vec![0.0f64; n];
    for k in (1..n).rev() {
        let s: f64 = q[k * n..k * n + k].iter().sum();
        assert!(s > 0.0, "state {k} unreachable from below; box too small");
        row_sum[k] = s;
        for i in 0..k {
            let f = q[i * n + k] / s;
            if f == 0.0 {
                continue;
            }
            for j in 0..k {
                if j != i {
                    q[i * n + j] += f * q[k * n + j];
                }
            }
        }
    }
    // Back-substitution.
    let mut pi = vec![0.0f64; n];
    pi[0] = 1.0;
    for k in 1..n {
        let mut num = 0.0;
        for i in 0..k {
            num += pi[i] * q[i * n + k];
        }
        pi[k] = num / row_sum[k];
    }
    let total: f64 = pi.iter().sum();
    let mut pmf = BTreeMap::new();
    let mut escape_rate = 0.0;
    for idx in 0..n {
        let p = pi[idx] / total;
        escape_rate += p * cut[idx];
        pmf.insert(unindex(idx, &caps), p);
    }
    StationarySolution { pmf, escape_rate }
}

/// Largest pointwise pmf discrepancy between the solved law and a closure.
pub fn max_pmf_error<const D: usize>(
    sol: &StationarySolution<D>,
    reference: impl Fn(&[u64; D]) -> f64,
) -> f64 {
    sol.pmf
        .iter()
        .map(|(x, &p)| (p - reference(x)).abs())
        .fold(0.0, f64::max)
}
