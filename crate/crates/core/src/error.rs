//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by model construction, simulation, and analysis.
#[derive(Debug, Error)]
pub enum Error {
    /// A kinetic or scaling parameter violates its precondition.
    #[error("invalid parameter: {0}")]
    InvalidParams(String),

    /// A state vector violates the network invariants.
    #[error("invalid state: {0}")]
    InvalidState(String),

    /// A coordinate reached its configured hard cap during simulation.
    #[error("coordinate {coord} reached hard cap {cap} at t={time}")]
    CapExceeded { coord: usize, cap: u64, time: f64 },

    /// A jump would drive a coordinate negative. Only possible when a
    /// channel's propensity fails to vanish at the boundary, i.e. a bug in
    /// the channel definition.
    #[error("channel `{channel}` drives coordinate {coord} negative at t={time}")]
    NegativeJump {
        channel: String,
        coord: usize,
        time: f64,
    },

    /// A sampling grid is malformed or extends beyond the trajectory.
    #[error("grid error: {0}")]
    Grid(String),

    /// An occupation window is malformed or extends beyond the trajectory.
    #[error("window error: {0}")]
    Window(String),

    /// Two distributions have different dimensions.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// Requested regime is inconsistent with the parameters.
    #[error("regime mismatch: {0}")]
    RegimeMismatch(String),

    /// The parameters sit on a regime boundary; limit statements do not apply.
    #[error("boundary regime: {0}")]
    Boundary(String),

    /// The limiting ODE left its admissible region during an experiment.
    #[error("ODE left the admissible region at t={time}")]
    OdeRegionExit { time: f64 },

    /// Malformed configuration.
    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
