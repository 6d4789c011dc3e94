//! Stochastic simulation and scaling-limit verification for a regulated
//! chemical reaction network.
//!
//! The network couples three conserved particle pools (`R`, `M`, `U`) with an
//! external resource flow (`Q`) to produce a product species. A sequestration
//! mechanism parks free `R`-particles when resources run low. The crate
//! provides:
//!
//! * [`model`] — species, kinetic parameters, reaction channels with
//!   mass-action propensities, and classification of the three asymptotic
//!   regimes (stable / optimal sequestration / saturation).
//! * [`ssa`] — exact event-by-event simulation of the jump Markov chain
//!   (Gillespie direct method), reproducible and parallel-safe.
//! * [`queues`] — closed-form invariant distributions of the fast
//!   subnetworks (infinite-server queueing networks, Poisson laws).
//! * [`limits`] — limiting ODE systems per regime, fixed points, linear
//!   stability, and limiting production curves.
//! * [`measures`] — occupation-measure estimation and total-variation
//!   comparisons between empirical and closed-form laws.
//! * [`harness`] — experiment runner verifying the scaling limits at
//!   finite `N`, with JSON configs and CSV/JSON reports.

pub mod error;
pub mod harness;
pub mod limits;
pub mod measures;
pub mod model;
pub mod queues;
pub mod rng;
pub mod ssa;

pub use error::{Error, Result};
