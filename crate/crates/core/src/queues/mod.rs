//! Infinite-server building blocks and closed-form invariant laws of the
//! fast subnetworks.
//!
//! Each asymptotic regime freezes the slow coordinates and leaves a small
//! network of infinite-server queues whose stationary law is explicit:
//! plain products of Poisson laws, or — for the stable regime, where a
//! departure feeds two nodes at once — the law of `(X+Y1, Z, X+Y2)` built
//! from four independent Poisson factors.

mod dist;

pub use dist::DiscreteDist;

use crate::error::{Error, Result};
use crate::model::{Channel, KineticParams, LimitFamily};
use crate::ssa::{simulate, Trajectory};

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParams(format!(
            "{name} must be positive and finite, got {v}"
        )))
    }
}

/// Stationary law of the M/M/∞ queue: `Pois(lambda/mu)`.
pub fn mm_inf_invariant(lambda: f64, mu: f64) -> Result<DiscreteDist> {
    positive("mu", mu)?;
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(Error::InvalidParams(format!(
            "lambda must be nonnegative, got {lambda}"
        )));
    }
    DiscreteDist::product(&[lambda / mu])
}

/// Birth-death channels of the M/M/∞ queue: birth at `lambda`, death at
/// `mu * x`.
pub fn mm_inf_channels(lambda: f64, mu: f64) -> Result<Vec<Channel<1>>> {
    positive("mu", mu)?;
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(Error::InvalidParams(format!(
            "lambda must be nonnegative, got {lambda}"
        )));
    }
    Ok(vec![
        Channel::new("arrival", [1], move |_x: &[u64; 1]| lambda),
        Channel::new("departure", [-1], move |x: &[u64; 1]| mu * x[0] as f64),
    ])
}

/// Exact path of an M/M/∞ queue.
pub fn mm_inf_simulate(
    lambda: f64,
    mu: f64,
    x0: u64,
    horizon: f64,
    seed: u64,
) -> Result<Trajectory<1>> {
    simulate(&mm_inf_channels(lambda, mu)?, [x0], horizon, seed)
}

/// Stationary law of the three-node fast network in which departures from
/// the middle node spawn one arrival at each outer node.
///
/// With state order `(r, l, u)`, the law is that of `(X+Y1, Z, X+Y2)` with
/// independent Poisson factors
///
/// `X ~ Pois(λ/(μ_R+μ_U))`, `Y1 ~ Pois(λ·μ_U/(μ_R(μ_R+μ_U)))`,
/// `Y2 ~ Pois(λ·μ_R/(μ_U(μ_R+μ_U)))`, `Z ~ Pois(λ/μ_L)`.
pub fn fastinv_dist(lambda: f64, mu_r: f64, mu_l: f64, mu_u: f64) -> Result<DiscreteDist> {
    positive("lambda", lambda)?;
    positive("mu_R", mu_r)?;
    positive("mu_L", mu_l)?;
    positive("mu_U", mu_u)?;
    let denom = mu_r + mu_u;
    DiscreteDist::shared_triple(
        lambda / denom,
        lambda * mu_u / (mu_r * denom),
        lambda / mu_l,
        lambda * mu_r / (mu_u * denom),
    )
}

/// Channels of the fast network behind [`fastinv_dist`], state `(r, l, u)`:
/// arrivals `+e_L` at `λ`, completions `+e_R+e_U-e_L` at `μ_L·l`, exits
/// `-e_R` at `μ_R·r` and `-e_U` at `μ_U·u`.
pub fn fastinv_ctmc_channels(
    lambda: f64,
    mu_r: f64,
    mu_l: f64,
    mu_u: f64,
) -> Result<Vec<Channel<3>>> {
    positive("lambda", lambda)?;
    positive("mu_R", mu_r)?;
    positive("mu_L", mu_l)?;
    positive("mu_U", mu_u)?;
    Ok(vec![
        Channel::new("arrival", [0, 1, 0], move |_x: &[u64; 3]| lambda),
        Channel::new("completion", [1, -1, 1], move |x: &[u64; 3]| {
            mu_l * x[1] as f64
        }),
        Channel::new("r-exit", [-1, 0, 0], move |x: &[u64; 3]| mu_r * x[0] as f64),
        Channel::new("u-exit", [0, 0, -1], move |x: &[u64; 3]| mu_u * x[2] as f64),
    ])
}

/// Stationary law of the two-node cascade: arrivals `+e_1` at `k_IL`,
/// transfers `e_2-e_1` at `k_LR·α·x_1`, side arrivals `+e_2` at
/// `k_LR(β-α)x_1`, exits `-e_2` at `k_QU·η·x_2`.
///
/// Returns `Pois(k_IL/(α·k_LR)) ⊗ Pois(β·k_IL/(α·η·k_QU))`. The second
/// parameter is fixed by flow balance (input rate `β·k_LR·E[x_1]` equals
/// output rate `η·k_QU·E[x_2]` in stationarity). The product form is exact
/// when `α = β`; for `α < β` the first marginal and both marginal means
/// remain exact.
pub fn cascade_invariant(
    alpha: f64,
    beta: f64,
    eta: f64,
    params: &KineticParams,
) -> Result<DiscreteDist> {
    params.validate()?;
    positive("alpha", alpha)?;
    positive("beta", beta)?;
    positive("eta", eta)?;
    if alpha > beta {
        return Err(Error::InvalidParams(format!(
            "alpha = {alpha} must not exceed beta = {beta}"
        )));
    }
    DiscreteDist::product(&[
        params.k_il / (alpha * params.k_lr),
        beta * params.k_il / (alpha * eta * params.k_qu),
    ])
}

/// Channels of the cascade behind [`cascade_invariant`], state `(x_1, x_2)`.
pub fn cascade_ctmc_channels(
    alpha: f64,
    beta: f64,
    eta: f64,
    params: &KineticParams,
) -> Result<Vec<Channel<2>>> {
    params.validate()?;
    positive("alpha", alpha)?;
    positive("beta", beta)?;
    positive("eta", eta)?;
    if alpha > beta {
        return Err(Error::InvalidParams(format!(
            "alpha = {alpha} must not exceed beta = {beta}"
        )));
    }
    let p = *params;
    Ok(vec![
        Channel::new("arrival", [1, 0], move |_x: &[u64; 2]| p.k_il),
        Channel::new("transfer", [-1, 1], move |x: &[u64; 2]| {
            p.k_lr * alpha * x[0] as f64
        }),
        Channel::new("side-arrival", [0, 1], move |x: &[u64; 2]| {
            p.k_lr * (beta - alpha) * x[0] as f64
        }),
        Channel::new("exit", [0, -1], move |x: &[u64; 2]| {
            p.k_qu * eta * x[1] as f64
        }),
    ])
}

/// Names of the three fast coordinates per limit family (`v` denotes the
/// charged-pair count `U0 - u`).
pub fn fast_coordinate_names(family: LimitFamily) -> [&'static str; 3] {
    match family {
        LimitFamily::Stable => ["r", "l", "u"],
        LimitFamily::UnderLoaded => ["r", "q", "v"],
        LimitFamily::OptimalSequestration => ["r", "l", "q"],
        LimitFamily::Saturation => ["r", "q", "v"],
    }
}

/// Checks that the slow variables sit in the family's admissible open
/// region.
pub fn check_slow(family: LimitFamily, slow: &[f64], c_u: f64) -> Result<()> {
    let expect_dim = family.slow_dim();
    if slow.len() != expect_dim {
        return Err(Error::DimensionMismatch(format!(
            "{family} expects {expect_dim} slow variables, got {}",
            slow.len()
        )));
    }
    let bad = |what: &str| {
        Err(Error::InvalidParams(format!(
            "slow variables {slow:?} outside the admissible region of {family}: {what}"
        )))
    };
    match family {
        LimitFamily::Stable => {
            if !slow[0].is_finite() || slow[0] <= 0.0 {
                return bad("q must be positive");
            }
        }
        LimitFamily::UnderLoaded => {
            if !(slow[0] > 0.0 && slow[0] < 1.0) {
                return bad("l must lie in (0,1)");
            }
        }
        LimitFamily::OptimalSequestration => {
            let (s, u) = (slow[0], slow[1]);
            if !(s > 0.0 && s < 1.0) {
                return bad("s must lie in (0,1)");
            }
            if !(u > 0.0 && u < c_u) {
                return bad("u must lie in (0, C_U)");
            }
        }
        LimitFamily::Saturation => {
            let (s, l) = (slow[0], slow[1]);
            if !(s > 0.0 && l > 0.0 && s + l < 1.0) {
                return bad("need s > 0, l > 0, s + l < 1");
            }
        }
    }
    Ok(())
}

/// The time-`t` invariant law of the fast coordinates, given the current
/// slow variables.
///
/// * `Stable` — slow `[q]`, law of `(R, L, U)`: the four-factor law with
///   `C_κ(q) = k_RI(C_M-1) + k_QU·q`; equivalently [`fastinv_dist`] with
///   `λ = k_IL`, `μ_R = k_RI(C_M-1)`, `μ_L = k_LR·C_U`, `μ_U = k_QU·q`.
/// * `UnderLoaded` — slow `[l]`, product law of `(R, Q, U0-U)`.
/// * `OptimalSequestration` — slow `[s, u]`, product law of `(R, L, Q)`.
/// * `Saturation` — slow `[s, l]`, product law of `(R, Q, U0-U)`.
pub fn regime_fast_dist(
    family: LimitFamily,
    params: &KineticParams,
    c_m: f64,
    c_u: f64,
    slow: &[f64],
) -> Result<DiscreteDist> {
    params.validate()?;
    check_slow(family, slow, c_u)?;
    let p = params;
    match family {
        LimitFamily::Stable => {
            let q = slow[0];
            let mu_r = p.k_ri * (c_m - 1.0);
            let mu_u = p.k_qu * q;
            let c_kappa = mu_r + mu_u;
            DiscreteDist::shared_triple(
                p.k_il / c_kappa,
                p.k_il * mu_u / (mu_r * c_kappa),
                p.k_il / (p.k_lr * c_u),
                p.k_il * mu_r / (mu_u * c_kappa),
            )
        }
        LimitFamily::UnderLoaded => {
            let l = slow[0];
            DiscreteDist::product(&[
                p.k_0q / (p.k_ri * (c_m - 1.0)),
                p.k_0q / (p.k_qu * c_u),
                p.k_0q / (p.k_lr * l),
            ])
        }
        LimitFamily::OptimalSequestration => {
            let (s, u) = (slow[0], slow[1]);
            DiscreteDist::product(&[
                (p.k_il * (1.0 - s) + p.k_sr * s) / (p.k_ri * (c_m - (1.0 - s)) + p.k_rs * u),
                p.k_il * (1.0 - s) / (p.k_lr * (c_u - u)),
                p.k_0q / (p.k_qu * u),
            ])
        }
        LimitFamily::Saturation => {
            let (s, l) = (slow[0], slow[1]);
            DiscreteDist::product(&[
                (p.k_0q + p.k_sr * s) / (p.k_ri * (c_m - 1.0 + s) + p.k_rs * c_u),
                p.k_0q / (p.k_qu * c_u),
                p.k_0q / (p.k_lr * l),
            ])
        }
    }
}

/// Channels of the frozen-slow-variable fast network whose stationary law
/// is [`regime_fast_dist`]. State order matches the distribution.
pub fn regime_fast_channels(
    family: LimitFamily,
    params: &KineticParams,
    c_m: f64,
    c_u: f64,
    slow: &[f64],
) -> Result<Vec<Channel<3>>> {
    params.validate()?;
    check_slow(family, slow, c_u)?;
    let p = *params;
    match family {
        LimitFamily::Stable => {
            let q = slow[0];
            fastinv_ctmc_channels(p.k_il, p.k_ri * (c_m - 1.0), p.k_lr * c_u, p.k_qu * q)
        }
        // Three queues in series: Q -> V -> R -> out.
        LimitFamily::UnderLoaded => {
            let l = slow[0];
            Ok(vec![
                Channel::new("q-arrival", [0, 1, 0], move |_x: &[u64; 3]| p.k_0q),
                Channel::new("charge", [0, -1, 1], move |x: &[u64; 3]| {
                    p.k_qu * c_u * x[1] as f64
                }),
                Channel::new("complete", [1, 0, -1], move |x: &[u64; 3]| {
                    p.k_lr * l * x[2] as f64
                }),
                Channel::new("r-exit", [-1, 0, 0], move |x: &[u64; 3]| {
                    p.k_ri * (c_m - 1.0) * x[0] as f64
                }),
            ])
        }
        LimitFamily::OptimalSequestration => {
            let (s, u) = (slow[0], slow[1]);
            Ok(vec![
                Channel::new("l-arrival", [0, 1, 0], move |_x: &[u64; 3]| {
                    p.k_il * (1.0 - s)
                }),
                Channel::new("complete", [1, -1, 0], move |x: &[u64; 3]| {
                    p.k_lr * (c_u - u) * x[1] as f64
                }),
                Channel::new("deseq", [1, 0, 0], move |_x: &[u64; 3]| p.k_sr * s),
                Channel::new("r-exit", [-1, 0, 0], move |x: &[u64; 3]| {
                    (p.k_rs * u + p.k_ri * (c_m - 1.0 + s)) * x[0] as f64
                }),
                Channel::new("q-arrival", [0, 0, 1], move |_x: &[u64; 3]| p.k_0q),
                Channel::new("q-exit", [0, 0, -1], move |x: &[u64; 3]| {
                    p.k_qu * u * x[2] as f64
                }),
            ])
        }
        LimitFamily::Saturation => {
            let (s, l) = (slow[0], slow[1]);
            Ok(vec![
                Channel::new("q-arrival", [0, 1, 0], move |_x: &[u64; 3]| p.k_0q),
                Channel::new("charge", [0, -1, 1], move |x: &[u64; 3]| {
                    p.k_qu * c_u * x[1] as f64
                }),
                Channel::new("complete", [1, 0, -1], move |x: &[u64; 3]| {
                    p.k_lr * l * x[2] as f64
                }),
                Channel::new("deseq", [1, 0, 0], move |_x: &[u64; 3]| p.k_sr * s),
                Channel::new("r-exit", [-1, 0, 0], move |x: &[u64; 3]| {
                    (p.k_rs * c_u + p.k_ri * (c_m - 1.0 + s)) * x[0] as f64
                }),
            ])
        }
    }
}
