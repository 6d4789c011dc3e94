//! Network definition: species, kinetic parameters, reaction channels with
//! mass-action propensities, and regime classification.
//!
//! The state lives in `ℕ^5` with coordinate order `(s, r, l, q, u)`:
//! sequestered `R`, free `R`, `R` in elongation, free `Q`, free `U`. The
//! three derived counts are never stored, so the two conservation laws
//! (total `R` = `N`, total `U` = `U0`) hold structurally:
//!
//! * initiation-phase complexes: `N - r - s - l`
//! * free `M`-particles: `M0 - (N - r - s)`
//! * charged pairs `UQ`: `U0 - u`

use serde::{Deserialize, Serialize};
use std::fmt;

use crate::error::{Error, Result};

/// Coordinate indices into the 5-dimensional state vector.
pub const S: usize = 0;
pub const R: usize = 1;
pub const L: usize = 2;
pub const Q: usize = 3;
pub const U: usize = 4;

/// Coordinate names in state order.
pub const SPECIES: [&str; 5] = ["s", "r", "l", "q", "u"];

/// Default relative tolerance for regime-boundary detection.
pub const DEFAULT_BOUNDARY_TOL: f64 = 1e-12;

/// The eight positive reaction rates.
///
/// Bimolecular rates (`k_RS`, `k_LR`, `k_RI`, `k_QU`) are per reactant pair
/// per unit time; the rest are per particle per unit time (`k_0Q` is per
/// `R`-particle: the resource inflow is `k_0Q · N`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KineticParams {
    #[serde(rename = "k_RS")]
    pub k_rs: f64,
    #[serde(rename = "k_SR")]
    pub k_sr: f64,
    #[serde(rename = "k_LR")]
    pub k_lr: f64,
    #[serde(rename = "k_Q0")]
    pub k_q0: f64,
    #[serde(rename = "k_0Q")]
    pub k_0q: f64,
    #[serde(rename = "k_RI")]
    pub k_ri: f64,
    #[serde(rename = "k_IL")]
    pub k_il: f64,
    #[serde(rename = "k_QU")]
    pub k_qu: f64,
}

impl KineticParams {
    /// All rates equal to one. Convenient baseline for tests and sweeps.
    pub fn unit() -> Self {
        Self {
            k_rs: 1.0,
            k_sr: 1.0,
            k_lr: 1.0,
            k_q0: 1.0,
            k_0q: 1.0,
            k_ri: 1.0,
            k_il: 1.0,
            k_qu: 1.0,
        }
    }

    /// Checks that every rate is strictly positive and finite.
    pub fn validate(&self) -> Result<()> {
        for (name, v) in self.named() {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParams(format!(
                    "rate {name} must be positive and finite, got {v}"
                )));
            }
        }
        Ok(())
    }

    /// All rates multiplied by `c` (a global time rescaling).
    pub fn scaled(&self, c: f64) -> Self {
        Self {
            k_rs: c * self.k_rs,
            k_sr: c * self.k_sr,
            k_lr: c * self.k_lr,
            k_q0: c * self.k_q0,
            k_0q: c * self.k_0q,
            k_ri: c * self.k_ri,
            k_il: c * self.k_il,
            k_qu: c * self.k_qu,
        }
    }

    /// Largest rate constant.
    pub fn max_rate(&self) -> f64 {
        self.named().iter().map(|&(_, v)| v).fold(0.0, f64::max)
    }

    fn named(&self) -> [(&'static str, f64); 8] {
        [
            ("k_RS", self.k_rs),
            ("k_SR", self.k_sr),
            ("k_LR", self.k_lr),
            ("k_Q0", self.k_q0),
            ("k_0Q", self.k_0q),
            ("k_RI", self.k_ri),
            ("k_IL", self.k_il),
            ("k_QU", self.k_qu),
        ]
    }
}

/// Totals and limit ratios of the particle pools.
///
/// `N` is the scaling parameter (total `R`-particles); `M0` and `U0` are the
/// total `M`- and `U`-counts, asymptotically `C_M · N` and `C_U · N`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingConfig {
    #[serde(rename = "N")]
    pub n: u64,
    #[serde(rename = "M0")]
    pub m0: u64,
    #[serde(rename = "U0")]
    pub u0: u64,
    #[serde(rename = "C_M")]
    pub c_m: f64,
    #[serde(rename = "C_U")]
    pub c_u: f64,
}

impl ScalingConfig {
    /// Builds totals from the limit ratios by nearest-integer rounding:
    /// `M0 = round(C_M · N)`, `U0 = round(C_U · N)`.
    ///
    /// This is the rounding rule recorded in all output metadata.
    pub fn from_ratios(n: u64, c_m: f64, c_u: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParams("N must be positive".into()));
        }
        if !(c_m.is_finite() && c_m > 1.0) {
            return Err(Error::InvalidParams(format!("C_M must be > 1, got {c_m}")));
        }
        if !(c_u.is_finite() && c_u > 0.0) {
            return Err(Error::InvalidParams(format!("C_U must be > 0, got {c_u}")));
        }
        let m0 = (c_m * n as f64).round() as u64;
        let u0 = (c_u * n as f64).round() as u64;
        Self::with_totals(n, m0, u0, c_m, c_u)
    }

    /// Builds a configuration with explicit totals.
    ///
    /// Requires `M0 ≥ N` so the pairing rate `k_RI (M0 - (N-r-s)) r` is never
    /// negative, and `U0 ≥ 1`.
    pub fn with_totals(n: u64, m0: u64, u0: u64, c_m: f64, c_u: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParams("N must be positive".into()));
        }
        if m0 < n {
            return Err(Error::InvalidParams(format!(
                "M0 = {m0} must be at least N = {n}"
            )));
        }
        if u0 == 0 {
            return Err(Error::InvalidParams("U0 must be positive".into()));
        }
        if !(c_m.is_finite() && c_m > 1.0) {
            return Err(Error::InvalidParams(format!("C_M must be > 1, got {c_m}")));
        }
        if !(c_u.is_finite() && c_u > 0.0) {
            return Err(Error::InvalidParams(format!("C_U must be > 0, got {c_u}")));
        }
        Ok(Self {
            n,
            m0,
            u0,
            c_m,
            c_u,
        })
    }

    /// Deviation of the integer totals from the target ratios,
    /// `max(|M0/N - C_M|, |U0/N - C_U|)`.
    pub fn ratio_error(&self) -> f64 {
        let em = (self.m0 as f64 / self.n as f64 - self.c_m).abs();
        let eu = (self.u0 as f64 / self.n as f64 - self.c_u).abs();
        em.max(eu)
    }
}

/// Integer state `(s, r, l, q, u)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct NetState {
    pub s: u64,
    pub r: u64,
    pub l: u64,
    pub q: u64,
    pub u: u64,
}

impl NetState {
    pub fn new(s: u64, r: u64, l: u64, q: u64, u: u64) -> Self {
        Self { s, r, l, q, u }
    }

    pub fn zero() -> Self {
        Self::new(0, 0, 0, 0, 0)
    }

    pub fn as_array(&self) -> [u64; 5] {
        [self.s, self.r, self.l, self.q, self.u]
    }

    pub fn from_array(x: [u64; 5]) -> Self {
        Self::new(x[0], x[1], x[2], x[3], x[4])
    }

    /// `s + r + l ≤ N` and `u ≤ U0`.
    pub fn is_valid(&self, scaling: &ScalingConfig) -> bool {
        self.s + self.r + self.l <= scaling.n && self.u <= scaling.u0
    }

    pub fn validate(&self, scaling: &ScalingConfig) -> Result<()> {
        if self.is_valid(scaling) {
            Ok(())
        } else {
            Err(Error::InvalidState(format!(
                "state {:?} violates s+r+l <= N = {} or u <= U0 = {}",
                self.as_array(),
                scaling.n,
                scaling.u0
            )))
        }
    }

    /// Number of initiation-phase complexes, `N - r - s - l`.
    pub fn rm_i(&self, scaling: &ScalingConfig) -> u64 {
        scaling.n - self.s - self.r - self.l
    }

    /// Number of free `M`-particles, `M0 - (N - r - s)`.
    pub fn free_m(&self, scaling: &ScalingConfig) -> u64 {
        scaling.m0 - scaling.n + self.r + self.s
    }

    /// Number of charged pairs, `U0 - u`.
    pub fn uq(&self, scaling: &ScalingConfig) -> u64 {
        scaling.u0 - self.u
    }
}

/// Propensity function of a reaction channel on a `D`-dimensional state.
pub type PropensityFn<const D: usize> = Box<dyn Fn(&[u64; D]) -> f64 + Send + Sync>;

/// One reaction channel: a jump vector and a mass-action propensity on a
/// `D`-dimensional integer state.
///
/// Propensities vanish (by construction) whenever the jump would leave the
/// state space, but this is asserted in tests rather than assumed.
pub struct Channel<const D: usize> {
    pub name: &'static str,
    pub jump: [i64; D],
    /// Whether firing this channel produces one product particle.
    pub counts_production: bool,
    propensity: PropensityFn<D>,
}

impl<const D: usize> Channel<D> {
    pub fn new(
        name: &'static str,
        jump: [i64; D],
        propensity: impl Fn(&[u64; D]) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            name,
            jump,
            counts_production: false,
            propensity: Box::new(propensity),
        }
    }

    /// Marks this channel as incrementing the production counter.
    pub fn production(mut self) -> Self {
        self.counts_production = true;
        self
    }

    /// Propensity at state `x`.
    pub fn propensity(&self, x: &[u64; D]) -> f64 {
        (self.propensity)(x)
    }

    /// `x + jump`, or `None` if any coordinate would go negative.
    pub fn apply(&self, x: &[u64; D]) -> Option<[u64; D]> {
        let mut y = *x;
        for (v, &d) in y.iter_mut().zip(&self.jump) {
            if d >= 0 {
                *v = v.checked_add(d as u64)?;
            } else {
                *v = v.checked_sub(d.unsigned_abs())?;
            }
        }
        Some(y)
    }
}

impl<const D: usize> fmt::Debug for Channel<D> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Channel")
            .field("name", &self.name)
            .field("jump", &self.jump)
            .field("counts_production", &self.counts_production)
            .finish()
    }
}

/// Builds the reaction channels of the network.
///
/// With regulation the eight channels are, in order: `q-arrival`,
/// `q-degradation`, `uq-pairing`, `elongation-completion` (increments the
/// production counter), `sequestration`, `desequestration`,
/// `initiation-pairing`, `initiation-to-elongation`.
///
/// Without regulation the two sequestration channels are removed and `s`
/// reads as zero in every propensity; since no remaining channel moves `s`,
/// the coordinate stays at its initial value (callers start it at 0).
pub fn build_network(
    params: &KineticParams,
    scaling: &ScalingConfig,
    regulated: bool,
) -> Result<Vec<Channel<5>>> {
    params.validate()?;
    let p = *params;
    let n = scaling.n;
    let m0 = scaling.m0;
    let u0 = scaling.u0;

    let mut channels: Vec<Channel<5>> = Vec::with_capacity(8);
    channels.push(Channel::new("q-arrival", [0, 0, 0, 1, 0], move |_x| {
        p.k_0q * n as f64
    }));
    channels.push(Channel::new("q-degradation", [0, 0, 0, -1, 0], move |x| {
        p.k_q0 * x[Q] as f64
    }));
    channels.push(Channel::new("uq-pairing", [0, 0, 0, -1, -1], move |x| {
        p.k_qu * x[U] as f64 * x[Q] as f64
    }));
    channels.push(
        Channel::new("elongation-completion", [0, 1, -1, 0, 1], move |x| {
            p.k_lr * (u0 - x[U]) as f64 * x[L] as f64
        })
        .production(),
    );
    if regulated {
        channels.push(Channel::new("sequestration", [1, -1, 0, 0, 0], move |x| {
            p.k_rs * x[R] as f64 * x[U] as f64
        }));
        channels.push(Channel::new(
            "desequestration",
            [-1, 1, 0, 0, 0],
            move |x| p.k_sr * x[S] as f64,
        ));
        channels.push(Channel::new(
            "initiation-pairing",
            [0, -1, 0, 0, 0],
            move |x| p.k_ri * (m0 - n + x[R] + x[S]) as f64 * x[R] as f64,
        ));
        channels.push(Channel::new(
            "initiation-to-elongation",
            [0, 0, 1, 0, 0],
            move |x| p.k_il * n.saturating_sub(x[S] + x[R] + x[L]) as f64,
        ));
    } else {
        channels.push(Channel::new(
            "initiation-pairing",
            [0, -1, 0, 0, 0],
            move |x| p.k_ri * (m0 - n + x[R]) as f64 * x[R] as f64,
        ));
        channels.push(Channel::new(
            "initiation-to-elongation",
            [0, 0, 1, 0, 0],
            move |x| p.k_il * n.saturating_sub(x[R] + x[L]) as f64,
        ));
    }
    Ok(channels)
}

/// Asymptotic regime of the regulated network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    /// `k_0Q > k_IL`: the resource inflow is large; `(S,R,L,U)` stay `O(1)`.
    Stable,
    /// Under-loaded with the sequestration condition satisfied: `(R,L,Q)`
    /// stay `O(1)` while `(S,U)` are macroscopic.
    OptimalSequestration,
    /// Under-loaded with the condition violated: elongation saturates,
    /// `(S,L)` are macroscopic.
    Saturation,
    /// Within tolerance of `k_0Q = k_IL` or of the critical `C_U`; the limit
    /// theorems exclude these equalities, so the classifier flags them.
    Boundary,
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Regime::Stable => "Stable",
            Regime::OptimalSequestration => "OptimalSequestration",
            Regime::Saturation => "Saturation",
            Regime::Boundary => "Boundary",
        };
        f.write_str(s)
    }
}

/// Critical value of `C_U` separating optimal sequestration from saturation
/// in the under-loaded case:
///
/// `(k_SR/k_RS) (k_RI/k_0Q) (C_M - k_0Q/k_IL) (1 - k_0Q/k_IL)`.
///
/// This is also the `u`-component of the optimal-sequestration fixed point.
pub fn critical_cu(params: &KineticParams, c_m: f64) -> f64 {
    let ratio = params.k_0q / params.k_il;
    (params.k_sr / params.k_rs) * (params.k_ri / params.k_0q) * (c_m - ratio) * (1.0 - ratio)
}

/// Classifies the regime with the default boundary tolerance.
pub fn classify_regime(params: &KineticParams, c_m: f64, c_u: f64) -> Result<Regime> {
    classify_regime_with_tol(params, c_m, c_u, DEFAULT_BOUNDARY_TOL)
}

/// Classifies the regime, flagging [`Regime::Boundary`] when `k_0Q` and
/// `k_IL`, or the critical `C_U` and `C_U`, agree to relative tolerance
/// `tol`.
pub fn classify_regime_with_tol(
    params: &KineticParams,
    c_m: f64,
    c_u: f64,
    tol: f64,
) -> Result<Regime> {
    params.validate()?;
    if !(c_m.is_finite() && c_m > 1.0) {
        return Err(Error::InvalidParams(format!("C_M must be > 1, got {c_m}")));
    }
    if !(c_u.is_finite() && c_u > 0.0) {
        return Err(Error::InvalidParams(format!("C_U must be > 0, got {c_u}")));
    }
    let scale = params.k_0q.max(params.k_il);
    if (params.k_0q - params.k_il).abs() <= tol * scale {
        return Ok(Regime::Boundary);
    }
    if params.k_0q > params.k_il {
        return Ok(Regime::Stable);
    }
    let phi = critical_cu(params, c_m);
    if (phi - c_u).abs() <= tol * phi.max(c_u) {
        return Ok(Regime::Boundary);
    }
    if phi < c_u {
        Ok(Regime::OptimalSequestration)
    } else {
        Ok(Regime::Saturation)
    }
}

/// The four limit families covered by the convergence theorems, selected by
/// the regime together with the regulation flag. Without regulation both
/// under-loaded regimes collapse to the same fluid limit for `L`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LimitFamily {
    /// `k_0Q > k_IL`, with or without regulation: `Q/N` follows a linear ODE.
    Stable,
    /// `k_0Q < k_IL`, no regulation: `L/N` follows a linear ODE.
    UnderLoaded,
    /// `k_0Q < k_IL`, regulated, condition satisfied: `(S,U)/N` follow a
    /// planar ODE.
    OptimalSequestration,
    /// `k_0Q < k_IL`, regulated, condition violated: `(S,L)/N` follow a
    /// planar ODE.
    Saturation,
}

impl LimitFamily {
    /// Selects the limit family for a classified regime.
    pub fn from_regime(regime: Regime, regulated: bool) -> Result<Self> {
        match (regime, regulated) {
            (Regime::Boundary, _) => Err(Error::Boundary(
                "no limit family at a regime boundary".into(),
            )),
            (Regime::Stable, _) => Ok(LimitFamily::Stable),
            (Regime::OptimalSequestration, true) => Ok(LimitFamily::OptimalSequestration),
            (Regime::Saturation, true) => Ok(LimitFamily::Saturation),
            (Regime::OptimalSequestration | Regime::Saturation, false) => {
                Ok(LimitFamily::UnderLoaded)
            }
        }
    }

    /// Dimension of the limiting ODE.
    pub fn slow_dim(&self) -> usize {
        match self {
            LimitFamily::Stable | LimitFamily::UnderLoaded => 1,
            LimitFamily::OptimalSequestration | LimitFamily::Saturation => 2,
        }
    }

    /// Checks that this family is one the classified regime admits (the
    /// under-loaded family covers both under-loaded regimes, since it is
    /// selected by dropping regulation).
    pub fn ensure_consistent(&self, params: &KineticParams, c_m: f64, c_u: f64) -> Result<()> {
        let regime = classify_regime(params, c_m, c_u)?;
        let ok = match self {
            LimitFamily::Stable => regime == Regime::Stable,
            LimitFamily::UnderLoaded => {
                matches!(regime, Regime::OptimalSequestration | Regime::Saturation)
            }
            LimitFamily::OptimalSequestration => regime == Regime::OptimalSequestration,
            LimitFamily::Saturation => regime == Regime::Saturation,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::RegimeMismatch(format!(
                "parameters classify as {regime}, inconsistent with the {self} limit family"
            )))
        }
    }
}

impl fmt::Display for LimitFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            LimitFamily::Stable => "Stable",
            LimitFamily::UnderLoaded => "UnderLoaded",
            LimitFamily::OptimalSequestration => "OptimalSequestration",
            LimitFamily::Saturation => "Saturation",
        };
        f.write_str(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params_all(v: f64) -> KineticParams {
        KineticParams::unit().scaled(v)
    }

    #[test]
    fn rejects_bad_parameters() {
        let mut p = KineticParams::unit();
        p.k_lr = 0.0;
        assert!(p.validate().is_err());
        p.k_lr = -1.0;
        assert!(p.validate().is_err());
        assert!(ScalingConfig::with_totals(10, 9, 5, 2.0, 0.5).is_err()); // M0 < N
        assert!(ScalingConfig::from_ratios(0, 2.0, 1.0).is_err());
        assert!(ScalingConfig::from_ratios(10, 1.0, 1.0).is_err()); // C_M must be > 1
        assert!(ScalingConfig::from_ratios(10, 2.0, 0.0).is_err());
    }

    #[test]
    fn rounding_rule_is_nearest_integer() {
        let sc = ScalingConfig::from_ratios(1000, 2.0, 10.0).unwrap();
        assert_eq!((sc.m0, sc.u0), (2000, 10_000));
        let sc = ScalingConfig::from_ratios(3, 1.5, 0.4).unwrap();
        assert_eq!((sc.m0, sc.u0), (5, 1)); // 4.5 -> 5 (round half away), 1.2 -> 1
        assert!(sc.ratio_error() <= 0.5 / 3.0 + 1e-12);
    }

    #[test]
    fn origin_enables_q_arrival_and_initiation_only() {
        // At (0,0,0,0,0) every stored coordinate is zero, but the derived
        // initiation count N - r - s - l equals N, so two channels fire:
        // q-arrival at k_0Q*N and initiation-to-elongation at k_IL*N. All
        // other mass-action factors vanish.
        let sc = ScalingConfig::with_totals(10, 20, 10, 2.0, 1.0).unwrap();
        let ch = build_network(&KineticParams::unit(), &sc, true).unwrap();
        assert_eq!(ch.len(), 8);
        let x = NetState::zero().as_array();
        for c in &ch {
            match c.name {
                "q-arrival" => assert_eq!(c.propensity(&x), 10.0),
                "initiation-to-elongation" => assert_eq!(c.propensity(&x), 10.0),
                _ => assert_eq!(c.propensity(&x), 0.0, "channel {}", c.name),
            }
        }
    }

    #[test]
    fn single_enabled_channel_state() {
        // (0, 0, N, 0, U0): all R in elongation, all U charged, no free Q.
        // The only enabled channel is q-arrival.
        let sc = ScalingConfig::with_totals(10, 20, 10, 2.0, 1.0).unwrap();
        let ch = build_network(&KineticParams::unit(), &sc, true).unwrap();
        let x = NetState::new(0, 0, 10, 0, 10).as_array();
        let positive: Vec<&str> = ch
            .iter()
            .filter(|c| c.propensity(&x) > 0.0)
            .map(|c| c.name)
            .collect();
        assert_eq!(positive, vec!["q-arrival"]);
    }

    #[test]
    fn propensities_match_direct_evaluation() {
        // All rates 1, N=10, M0=20, U0=10, state (1,2,3,4,5).
        let sc = ScalingConfig::with_totals(10, 20, 10, 2.0, 1.0).unwrap();
        let ch = build_network(&KineticParams::unit(), &sc, true).unwrap();
        let x = NetState::new(1, 2, 3, 4, 5).as_array();
        let get = |name: &str| {
            ch.iter()
                .find(|c| c.name == name)
                .unwrap_or_else(|| panic!("missing channel {name}"))
                .propensity(&x)
        };
        assert_eq!(get("sequestration"), 10.0); // r*u = 2*5
        assert_eq!(get("initiation-to-elongation"), 4.0); // 10-1-2-3
        assert_eq!(get("elongation-completion"), 15.0); // (10-5)*3
        assert_eq!(get("q-degradation"), 4.0);
        assert_eq!(get("uq-pairing"), 20.0); // u*q = 5*4
        assert_eq!(get("desequestration"), 1.0);
        assert_eq!(get("initiation-pairing"), 26.0); // (20-10+2+1)*2
    }

    #[test]
    fn saturated_u_blocks_elongation() {
        let sc = ScalingConfig::with_totals(10, 20, 10, 2.0, 1.0).unwrap();
        let ch = build_network(&KineticParams::unit(), &sc, true).unwrap();
        let x = NetState::new(0, 1, 3, 2, 10).as_array(); // u = U0
        let get = |name: &str| ch.iter().find(|c| c.name == name).unwrap().propensity(&x);
        assert_eq!(get("elongation-completion"), 0.0);
        assert_eq!(get("uq-pairing"), 20.0); // k_QU * U0 * q = 10*2
    }

    #[test]
    fn unregulated_network_has_six_channels_and_frozen_s() {
        let sc = ScalingConfig::with_totals(10, 20, 10, 2.0, 1.0).unwrap();
        let ch = build_network(&KineticParams::unit(), &sc, false).unwrap();
        assert_eq!(ch.len(), 6);
        for c in &ch {
            assert_eq!(c.jump[S], 0, "channel {} moves s", c.name);
        }
        // s reads as 0: initiation-pairing at r=2 is (M0-N+r)*r regardless of s.
        let x = NetState::new(0, 2, 3, 4, 5).as_array();
        let get = |name: &str| ch.iter().find(|c| c.name == name).unwrap().propensity(&x);
        assert_eq!(get("initiation-pairing"), 24.0); // (20-10+2)*2
        assert_eq!(get("initiation-to-elongation"), 5.0); // 10-2-3
    }

    /// Exhaustive check on a tiny instance: wherever a channel has positive
    /// propensity, the jumped state is still valid, and the conservation
    /// totals are untouched.
    #[test]
    fn jumps_preserve_state_space_exhaustively() {
        let sc = ScalingConfig::with_totals(2, 3, 2, 1.5, 1.0).unwrap();
        for regulated in [true, false] {
            let ch = build_network(&KineticParams::unit(), &sc, regulated).unwrap();
            for s in 0..=2u64 {
                for r in 0..=2u64 {
                    for l in 0..=2u64 {
                        for q in 0..=3u64 {
                            for u in 0..=2u64 {
                                let st = NetState::new(s, r, l, q, u);
                                if !st.is_valid(&sc) || (!regulated && s != 0) {
                                    continue;
                                }
                                let x = st.as_array();
                                for c in &ch {
                                    if c.propensity(&x) > 0.0 {
                                        let y = c.apply(&x).unwrap_or_else(|| {
                                            panic!("{} underflows at {x:?}", c.name)
                                        });
                                        let next = NetState::from_array(y);
                                        assert!(
                                            next.is_valid(&sc),
                                            "{} leaves state space at {x:?}",
                                            c.name
                                        );
                                        // Conservation: total R and total U.
                                        assert_eq!(next.s + next.r + next.l + next.rm_i(&sc), sc.n);
                                        assert_eq!(next.u + next.uq(&sc), sc.u0);
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn classify_matches_worked_examples() {
        // k_0Q > k_IL -> Stable.
        let mut p = params_all(1.0);
        p.k_0q = 2.0;
        p.k_il = 1.0;
        assert_eq!(classify_regime(&p, 2.0, 1.0).unwrap(), Regime::Stable);

        // Phi = (2-0.5)(0.5) = 0.75 < 10 -> OptimalSequestration.
        let mut p = params_all(1.0);
        p.k_0q = 1.0;
        p.k_il = 2.0;
        let phi = critical_cu(&p, 2.0);
        assert!((phi - 0.75).abs() < 1e-15);
        assert_eq!(
            classify_regime(&p, 2.0, 10.0).unwrap(),
            Regime::OptimalSequestration
        );

        // Phi = (1/3)(1.75)(0.75) = 0.4375 > 0.25 -> Saturation.
        let mut p = params_all(1.0);
        p.k_0q = 3.0;
        p.k_il = 12.0;
        let phi = critical_cu(&p, 2.0);
        assert!((phi - 0.4375).abs() < 1e-15);
        assert_eq!(classify_regime(&p, 2.0, 0.25).unwrap(), Regime::Saturation);
    }

    #[test]
    fn classify_flags_boundaries() {
        let p = params_all(1.0); // k_0Q == k_IL
        assert_eq!(classify_regime(&p, 2.0, 1.0).unwrap(), Regime::Boundary);

        let mut p = params_all(1.0);
        p.k_0q = 1.0;
        p.k_il = 2.0;
        let phi = critical_cu(&p, 2.0);
        assert_eq!(classify_regime(&p, 2.0, phi).unwrap(), Regime::Boundary);
        assert_eq!(
            classify_regime(&p, 2.0, phi * (1.0 + 1e-6)).unwrap(),
            Regime::OptimalSequestration
        );
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        fn rate() -> impl Strategy<Value = f64> {
            (-1.0..1.0f64).prop_map(|e| 10f64.powf(e))
        }

        fn arb_params() -> impl Strategy<Value = KineticParams> {
            (
                (rate(), rate(), rate(), rate()),
                (rate(), rate(), rate(), rate()),
            )
                .prop_map(|((k_rs, k_sr, k_lr, k_q0), (k_0q, k_ri, k_il, k_qu))| {
                    KineticParams {
                        k_rs,
                        k_sr,
                        k_lr,
                        k_q0,
                        k_0q,
                        k_ri,
                        k_il,
                        k_qu,
                    }
                })
        }

        proptest! {
            /// The regime depends only on rate ratios, so a global time
            /// rescaling never changes the classification.
            #[test]
            fn classification_is_scale_invariant(
                p in arb_params(),
                c_m in 1.01..4.0f64,
                c_u in rate(),
                c in 0.001..1000.0f64,
            ) {
                prop_assert_eq!(
                    classify_regime(&p, c_m, c_u).unwrap(),
                    classify_regime(&p.scaled(c), c_m, c_u).unwrap()
                );
            }

            /// Wherever a channel is enabled, firing it keeps the state in
            /// the state space, for any rates.
            #[test]
            fn enabled_jumps_stay_in_the_state_space(
                p in arb_params(),
                regulated in proptest::bool::ANY,
                s in 0u64..3,
                r in 0u64..3,
                l in 0u64..3,
                q in 0u64..4,
                u in 0u64..3,
            ) {
                let sc = ScalingConfig::with_totals(4, 6, 2, 1.5, 0.5).unwrap();
                let st = NetState::new(if regulated { s } else { 0 }, r, l, q, u);
                prop_assume!(st.is_valid(&sc));
                let channels = build_network(&p, &sc, regulated).unwrap();
                for c in &channels {
                    if c.propensity(&st.as_array()) > 0.0 {
                        let next = c.apply(&st.as_array()).expect("jump underflow");
                        prop_assert!(NetState::from_array(next).is_valid(&sc));
                    }
                }
            }
        }
    }

    #[test]
    fn limit_family_selection() {
        assert_eq!(
            LimitFamily::from_regime(Regime::Stable, false).unwrap(),
            LimitFamily::Stable
        );
        assert_eq!(
            LimitFamily::from_regime(Regime::Saturation, false).unwrap(),
            LimitFamily::UnderLoaded
        );
        assert_eq!(
            LimitFamily::from_regime(Regime::OptimalSequestration, false).unwrap(),
            LimitFamily::UnderLoaded
        );
        assert!(LimitFamily::from_regime(Regime::Boundary, true).is_err());
    }
}
