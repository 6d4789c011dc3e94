//! Limiting ODE systems per regime, a fixed-step RK4 integrator, fixed
//! points, linear stability analysis, and limiting production curves.
//!
//! The scaled slow coordinates converge to these deterministic dynamics:
//!
//! * stable: `q' = k_0Q - k_IL - k_Q0 q`
//! * under-loaded (no regulation): `l' = k_IL (1 - l) - k_0Q`
//! * optimal sequestration: the planar system for `(s, u)`
//! * saturation: the planar system for `(s, l)`
//!
//! Note the sign of the degradation term in the stable ODE: the inflow
//! surplus `k_0Q - k_IL` is damped by `-k_Q0 q`, which is the only reading
//! with a finite stable rest point `q∞ = (k_0Q - k_IL)/k_Q0`.

use serde::Serialize;
use std::fmt;

use crate::error::{Error, Result};
use crate::model::{KineticParams, LimitFamily};

/// Right-hand side: writes the derivative of `x` at time `t` into `out`.
pub type RhsFn = Box<dyn Fn(f64, &[f64], &mut [f64]) + Send + Sync>;

/// Membership test for the admissible region.
pub type AdmissibleFn = Box<dyn Fn(&[f64]) -> bool + Send + Sync>;

/// A small autonomous ODE system with an admissible region.
pub struct OdeSystem {
    pub dim: usize,
    pub description: String,
    rhs: RhsFn,
    admissible: AdmissibleFn,
}

impl OdeSystem {
    pub fn new(
        dim: usize,
        description: impl Into<String>,
        rhs: impl Fn(f64, &[f64], &mut [f64]) + Send + Sync + 'static,
        admissible: impl Fn(&[f64]) -> bool + Send + Sync + 'static,
    ) -> Self {
        Self {
            dim,
            description: description.into(),
            rhs: Box::new(rhs),
            admissible: Box::new(admissible),
        }
    }

    /// Evaluates the right-hand side at `(t, x)` into `out`.
    pub fn rhs(&self, t: f64, x: &[f64], out: &mut [f64]) {
        (self.rhs)(t, x, out);
    }

    /// Evaluates the right-hand side, allocating the result.
    pub fn rhs_vec(&self, t: f64, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        self.rhs(t, x, &mut out);
        out
    }

    pub fn admissible(&self, x: &[f64]) -> bool {
        (self.admissible)(x)
    }
}

impl fmt::Debug for OdeSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("OdeSystem")
            .field("dim", &self.dim)
            .field("description", &self.description)
            .finish()
    }
}

/// Marker recorded when a solution leaves the admissible region.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegionExit {
    /// Index of the first grid point that would have been inadmissible.
    pub step: usize,
    pub time: f64,
}

/// A fixed-step solution on a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct OdeSolution {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub dt: f64,
    pub method: &'static str,
    /// Set when integration stopped at the admissible-region boundary; the
    /// recorded states end just before the violation (no extrapolation).
    pub region_exit: Option<RegionExit>,
}

impl OdeSolution {
    pub fn last_state(&self) -> &[f64] {
        self.states.last().expect("solution has at least x0")
    }
}

/// The limiting ODE for a limit family.
pub fn limiting_ode(
    family: LimitFamily,
    params: &KineticParams,
    c_m: f64,
    c_u: f64,
) -> Result<OdeSystem> {
    params.validate()?;
    family.ensure_consistent(params, c_m, c_u)?;
    let p = *params;
    // Admissible regions are the closures of the regions in which the limit
    // theorems live; the boundary itself is harmless for the right-hand
    // sides, and closing it lets integration start from states like q = 0.
    // The probabilistic laws keep the strict open regions (`check_slow`).
    let sys = match family {
        LimitFamily::Stable => OdeSystem::new(
            1,
            "q' = k_0Q - k_IL - k_Q0 q",
            move |_t, x, out| {
                out[0] = p.k_0q - p.k_il - p.k_q0 * x[0];
            },
            |x| x[0] >= 0.0,
        ),
        LimitFamily::UnderLoaded => OdeSystem::new(
            1,
            "l' = k_IL (1 - l) - k_0Q",
            move |_t, x, out| {
                out[0] = p.k_il * (1.0 - x[0]) - p.k_0q;
            },
            |x| (0.0..=1.0).contains(&x[0]),
        ),
        LimitFamily::OptimalSequestration => {
            let cu = c_u;
            OdeSystem::new(
                2,
                "planar (s, u) system of the optimal-sequestration regime",
                move |_t, x, out| {
                    let (s, u) = (x[0], x[1]);
                    let inflow = p.k_il * (1.0 - s) + p.k_sr * s;
                    let outflow = p.k_ri * (c_m - (1.0 - s)) + p.k_rs * u;
                    out[0] = p.k_rs * u * inflow / outflow - p.k_sr * s;
                    out[1] = p.k_il * (1.0 - s) - p.k_0q;
                },
                move |x| (0.0..=1.0).contains(&x[0]) && (0.0..=cu).contains(&x[1]),
            )
        }
        LimitFamily::Saturation => OdeSystem::new(
            2,
            "planar (s, l) system of the saturation regime",
            move |_t, x, out| {
                let (s, l) = (x[0], x[1]);
                out[0] = p.k_rs * c_u * (p.k_0q + p.k_sr * s)
                    / (p.k_ri * (c_m - 1.0 + s) + p.k_rs * c_u)
                    - p.k_sr * s;
                out[1] = p.k_il * (1.0 - l - s) - p.k_0q;
            },
            |x| x[0] >= 0.0 && x[1] >= 0.0 && x[0] + x[1] <= 1.0,
        ),
    };
    Ok(sys)
}

/// Default RK4 step: `1e-3 / max-rate`, where max-rate is the largest rate
/// constant amplified by the pool ratios.
pub fn default_dt(params: &KineticParams, c_m: f64, c_u: f64) -> f64 {
    1e-3 / (params.max_rate() * c_m.max(c_u).max(1.0))
}

/// Classical fixed-step RK4 on `[0, horizon]`.
///
/// The grid is uniform with `ceil(horizon/dt)` steps (the step is shrunk to
/// divide the horizon exactly). Integration stops without extrapolating if
/// the state leaves the admissible region.
pub fn integrate(system: &OdeSystem, x0: &[f64], horizon: f64, dt: f64) -> Result<OdeSolution> {
    if x0.len() != system.dim {
        return Err(Error::DimensionMismatch(format!(
            "x0 has dimension {}, system {}",
            x0.len(),
            system.dim
        )));
    }
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::InvalidParams(format!(
            "dt must be positive, got {dt}"
        )));
    }
    if !(horizon.is_finite() && horizon >= 0.0) {
        return Err(Error::InvalidParams(format!(
            "horizon must be nonnegative, got {horizon}"
        )));
    }
    if !system.admissible(x0) {
        return Err(Error::InvalidParams(format!(
            "x0 = {x0:?} outside the admissible region ({})",
            system.description
        )));
    }
    let steps = if horizon == 0.0 {
        0
    } else {
        (horizon / dt).ceil() as usize
    };
    let dt = if steps == 0 {
        dt
    } else {
        horizon / steps as f64
    };
    let dim = system.dim;
    let mut times = Vec::with_capacity(steps + 1);
    let mut states = Vec::with_capacity(steps + 1);
    times.push(0.0);
    states.push(x0.to_vec());

    let mut x = x0.to_vec();
    let mut k1 = vec![0.0; dim];
    let mut k2 = vec![0.0; dim];
    let mut k3 = vec![0.0; dim];
    let mut k4 = vec![0.0; dim];
    let mut tmp = vec![0.0; dim];
    let mut region_exit = None;

    for step in 0..steps {
        let t = step as f64 * dt;
        system.rhs(t, &x, &mut k1);
        for i in 0..dim {
            tmp[i] = x[i] + 0.5 * dt * k1[i];
        }
        system.rhs(t + 0.5 * dt, &tmp, &mut k2);
        for i in 0..dim {
            tmp[i] = x[i] + 0.5 * dt * k2[i];
        }
        system.rhs(t + 0.5 * dt, &tmp, &mut k3);
        for i in 0..dim {
            tmp[i] = x[i] + dt * k3[i];
        }
        system.rhs(t + dt, &tmp, &mut k4);
        for i in 0..dim {
            x[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        if !system.admissible(&x) {
            region_exit = Some(RegionExit {
                step: step + 1,
                time: (step + 1) as f64 * dt,
            });
            break;
        }
        times.push((step + 1) as f64 * dt);
        states.push(x.clone());
    }

    Ok(OdeSolution {
        times,
        states,
        dt,
        method: "rk4",
        region_exit,
    })
}

/// The rest point of the limiting ODE.
///
/// * stable: `q∞ = (k_0Q - k_IL)/k_Q0`
/// * under-loaded: `l∞ = 1 - k_0Q/k_IL`
/// * optimal sequestration: `s∞ = 1 - k_0Q/k_IL`, `u∞ = critical C_U`
/// * saturation: `s∞` is the positive root of
///   `k_RI k_SR s² + (C_M-1) k_RI k_SR s - C_U k_0Q k_RS`, and
///   `l∞ = 1 - k_0Q/k_IL - s∞`
pub fn fixed_point(
    family: LimitFamily,
    params: &KineticParams,
    c_m: f64,
    c_u: f64,
) -> Result<Vec<f64>> {
    params.validate()?;
    let p = params;
    let fp = match family {
        LimitFamily::Stable => vec![(p.k_0q - p.k_il) / p.k_q0],
        LimitFamily::UnderLoaded => vec![1.0 - p.k_0q / p.k_il],
        LimitFamily::OptimalSequestration => {
            let s = 1.0 - p.k_0q / p.k_il;
            let u = crate::model::critical_cu(p, c_m);
            vec![s, u]
        }
        LimitFamily::Saturation => {
            let b = c_m - 1.0;
            let s = 0.5 * (-b + (b * b + 4.0 * c_u * (p.k_0q / p.k_ri) * (p.k_rs / p.k_sr)).sqrt());
            let l = 1.0 - p.k_0q / p.k_il - s;
            vec![s, l]
        }
    };
    Ok(fp)
}

/// Linear stability facts at the fixed point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityReport {
    /// Real parts of the Jacobian eigenvalues (one per dimension).
    pub eigenvalue_real_parts: Vec<f64>,
    /// All real parts strictly negative.
    pub stable: bool,
    /// Characteristic-polynomial coefficients, highest degree first. For the
    /// optimal-sequestration system these are the closed-form coefficients
    /// (all positive when `k_IL > k_0Q`, up to the overall positive scale);
    /// for the other families they come from the numerical Jacobian.
    pub polynomial: Vec<f64>,
    /// The fixed point the report refers to.
    pub fixed_point: Vec<f64>,
}

/// Central-difference Jacobian of the system at `x`, step `1e-6 * scale`.
fn jacobian(system: &OdeSystem, x: &[f64]) -> Vec<Vec<f64>> {
    let dim = system.dim;
    let mut jac = vec![vec![0.0; dim]; dim];
    for j in 0..dim {
        let h = 1e-6 * x[j].abs().max(1.0);
        let mut xp = x.to_vec();
        let mut xm = x.to_vec();
        xp[j] += h;
        xm[j] -= h;
        let fp = system.rhs_vec(0.0, &xp);
        let fm = system.rhs_vec(0.0, &xm);
        for i in 0..dim {
            jac[i][j] = (fp[i] - fm[i]) / (2.0 * h);
        }
    }
    jac
}

/// Closed-form characteristic-polynomial coefficients of the
/// optimal-sequestration Jacobian, highest degree first.
pub fn optimal_char_poly(params: &KineticParams, c_m: f64) -> [f64; 3] {
    let p = params;
    let c2 = p.k_ri
        * (p.k_0q * p.k_il + p.k_sr * (p.k_il - p.k_0q))
        * ((c_m - 1.0) * p.k_il + p.k_il - p.k_0q);
    let c1 = (c_m - 1.0) * p.k_il.powi(3) * p.k_ri * p.k_sr
        + p.k_il * p.k_ri * p.k_sr * (p.k_il * p.k_il - p.k_0q * p.k_0q);
    let c0 = p.k_il.powi(3) * p.k_rs * p.k_0q * p.k_0q;
    [c2, c1, c0]
}

/// Evaluates eigenvalue real parts and stability at the fixed point.
///
/// The Jacobian is computed by central finite differences; 2x2 eigenvalues
/// come from the trace/determinant closed form.
pub fn stability_report(
    family: LimitFamily,
    params: &KineticParams,
    c_m: f64,
    c_u: f64,
) -> Result<StabilityReport> {
    let system = limiting_ode(family, params, c_m, c_u)?;
    let fp = fixed_point(family, params, c_m, c_u)?;
    if !system.admissible(&fp) {
        return Err(Error::RegimeMismatch(format!(
            "fixed point {fp:?} outside the admissible region ({})",
            system.description
        )));
    }
    let jac = jacobian(&system, &fp);
    let (real_parts, polynomial) = match system.dim {
        1 => {
            let a = jac[0][0];
            (vec![a], vec![1.0, -a])
        }
        2 => {
            let tr = jac[0][0] + jac[1][1];
            let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
            let disc = tr * tr - 4.0 * det;
            let parts = if disc >= 0.0 {
                let root = disc.sqrt();
                vec![(tr + root) / 2.0, (tr - root) / 2.0]
            } else {
                vec![tr / 2.0, tr / 2.0]
            };
            let poly = if family == LimitFamily::OptimalSequestration {
                optimal_char_poly(params, c_m).to_vec()
            } else {
                vec![1.0, -tr, det]
            };
            (parts, poly)
        }
        d => {
            return Err(Error::InvalidParams(format!(
                "stability analysis supports dimensions 1 and 2, got {d}"
            )))
        }
    };
    let stable = real_parts.iter().all(|&re| re < 0.0);
    if family == LimitFamily::OptimalSequestration && params.k_il > params.k_0q {
        debug_assert!(
            polynomial.iter().all(|&c| c > 0.0),
            "closed-form coefficients must be positive when k_IL > k_0Q"
        );
    }
    Ok(StabilityReport {
        eigenvalue_real_parts: real_parts,
        stable,
        polynomial,
        fixed_point: fp,
    })
}

/// The limiting production curve `t -> lim P_N(t)/N` on the solution grid.
///
/// * stable: `k_IL · t`
/// * under-loaded and saturation: `k_0Q · t`
/// * optimal sequestration: `k_IL ∫ (1 - s(w)) dw` by trapezoidal quadrature
pub fn production_limit(
    family: LimitFamily,
    params: &KineticParams,
    sol: &OdeSolution,
) -> Result<Vec<f64>> {
    params.validate()?;
    if let Some(state) = sol.states.first() {
        if state.len() != family.slow_dim() {
            return Err(Error::RegimeMismatch(format!(
                "solution has dimension {}, the {family} limit has {}",
                state.len(),
                family.slow_dim()
            )));
        }
    }
    let out = match family {
        LimitFamily::Stable => sol.times.iter().map(|&t| params.k_il * t).collect(),
        LimitFamily::UnderLoaded | LimitFamily::Saturation => {
            sol.times.iter().map(|&t| params.k_0q * t).collect()
        }
        LimitFamily::OptimalSequestration => {
            let mut acc = 0.0;
            let mut out = Vec::with_capacity(sol.times.len());
            out.push(0.0);
            for i in 1..sol.times.len() {
                let dt = sol.times[i] - sol.times[i - 1];
                let f0 = 1.0 - sol.states[i - 1][0];
                let f1 = 1.0 - sol.states[i][0];
                acc += 0.5 * dt * (f0 + f1);
                out.push(params.k_il * acc);
            }
            out
        }
    };
    Ok(out)
}
