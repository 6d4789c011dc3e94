//! Exact stochastic simulation of the jump Markov chain.
//!
//! Gillespie direct method: draw an exponential waiting time from the total
//! propensity, then pick the firing channel with probability proportional to
//! its propensity. This samples the same law as the continuous-time chain
//! defined by the channels' Q-matrix.
//!
//! Simulation is a pure function of `(channels, initial, horizon, seed)`;
//! replicas derive their seeds from a base seed with
//! [`crate::rng::derive_seed`] and can run on any number of threads without
//! changing the output.

use rand::Rng;
use rayon::prelude::*;
use std::io::Write;

use crate::error::{Error, Result};
use crate::model::Channel;
use crate::rng::{derive_seed, exp_variate, rng_from_seed, SimRng};

/// State and cumulative production count at one sample time.
pub type GridSample<const D: usize> = ([u64; D], u64);

/// One jump of the chain. `state` is the post-jump state, `production` the
/// cumulative number of production events up to and including this one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event<const D: usize> {
    pub time: f64,
    pub channel: usize,
    pub state: [u64; D],
    pub production: u64,
}

/// An event-resolved sample path on `[0, horizon]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<const D: usize> {
    pub initial: [u64; D],
    pub horizon: f64,
    pub seed: u64,
    /// Event log; empty when recording was disabled.
    pub events: Vec<Event<D>>,
    /// Whether `events` holds the complete log.
    pub events_recorded: bool,
    pub final_state: [u64; D],
    pub final_production: u64,
    pub total_events: u64,
}

impl<const D: usize> Trajectory<D> {
    /// State and production at time `t` under the cadlag convention
    /// (right-continuous with left limits). Requires the event log.
    pub fn at(&self, t: f64) -> Result<([u64; D], u64)> {
        if !self.events_recorded {
            return Err(Error::Grid("event log was not recorded".into()));
        }
        if !(0.0..=self.horizon).contains(&t) {
            return Err(Error::Grid(format!(
                "t = {t} outside [0, {}]",
                self.horizon
            )));
        }
        // Index of the last event with time <= t.
        let idx = self.events.partition_point(|e| e.time <= t);
        if idx == 0 {
            Ok((self.initial, 0))
        } else {
            let e = &self.events[idx - 1];
            Ok((e.state, e.production))
        }
    }

    /// Checks `predicate` on the initial state and on every event state.
    pub fn check_states(&self, predicate: impl Fn(&[u64; D]) -> bool) -> bool {
        predicate(&self.initial) && self.events.iter().all(|e| predicate(&e.state))
    }
}

/// Simulation controls.
#[derive(Debug, Clone)]
pub struct SimOptions<const D: usize> {
    /// Record the full event log (default). Disable for long runs where only
    /// the final state and production counter are needed.
    pub record_events: bool,
    /// Per-coordinate hard caps; the simulator fails fast with
    /// [`Error::CapExceeded`] instead of letting an unbounded coordinate run
    /// away.
    pub caps: [Option<u64>; D],
}

impl<const D: usize> Default for SimOptions<D> {
    fn default() -> Self {
        Self {
            record_events: true,
            caps: [None; D],
        }
    }
}

impl<const D: usize> SimOptions<D> {
    pub fn with_cap(mut self, coord: usize, cap: u64) -> Self {
        self.caps[coord] = Some(cap);
        self
    }

    pub fn without_events(mut self) -> Self {
        self.record_events = false;
        self
    }
}

/// Picks the channel index for a uniform draw `u` in `[0, total)` by a
/// cumulative scan of `weights`.
pub(crate) fn pick_channel(weights: &[f64], total: f64, u: f64) -> usize {
    let target = u * total;
    let mut acc = 0.0;
    for (i, &w) in weights.iter().enumerate() {
        acc += w;
        if target < acc {
            return i;
        }
    }
    // Rounding can push the target past the last positive weight.
    weights
        .iter()
        .rposition(|&w| w > 0.0)
        .expect("pick_channel called with all-zero weights")
}

/// Runs one exact trajectory with default options.
pub fn simulate<const D: usize>(
    channels: &[Channel<D>],
    initial: [u64; D],
    horizon: f64,
    seed: u64,
) -> Result<Trajectory<D>> {
    simulate_with(channels, initial, horizon, seed, &SimOptions::default())
}

/// Core jump loop: invokes `on_event` after every accepted jump with
/// `(time, channel, post-state, production)`.
fn run_core<const D: usize>(
    channels: &[Channel<D>],
    initial: [u64; D],
    horizon: f64,
    seed: u64,
    caps: &[Option<u64>; D],
    mut on_event: impl FnMut(f64, usize, &[u64; D], u64),
) -> Result<([u64; D], u64, u64)> {
    if !(horizon.is_finite() && horizon >= 0.0) {
        return Err(Error::InvalidParams(format!(
            "horizon must be finite and nonnegative, got {horizon}"
        )));
    }
    let mut rng: SimRng = rng_from_seed(seed);
    let mut state = initial;
    let mut t = 0.0;
    let mut production: u64 = 0;
    let mut total_events: u64 = 0;
    let mut weights = vec![0.0f64; channels.len()];

    loop {
        let mut total = 0.0;
        for (w, c) in weights.iter_mut().zip(channels) {
            *w = c.propensity(&state);
            debug_assert!(*w >= 0.0 && w.is_finite(), "bad propensity for {}", c.name);
            total += *w;
        }
        if total <= 0.0 {
            break; // absorbing state
        }
        t += exp_variate(&mut rng, total);
        if t > horizon {
            break;
        }
        let idx = pick_channel(&weights, total, rng.random::<f64>());
        let ch = &channels[idx];
        state = ch.apply(&state).ok_or_else(|| {
            let coord = (0..D)
                .find(|&i| ch.jump[i] < 0 && state[i] < ch.jump[i].unsigned_abs())
                .unwrap_or(0);
            Error::NegativeJump {
                channel: ch.name.to_string(),
                coord,
                time: t,
            }
        })?;
        for (i, cap) in caps.iter().enumerate() {
            if let Some(cap) = cap {
                if state[i] > *cap {
                    return Err(Error::CapExceeded {
                        coord: i,
                        cap: *cap,
                        time: t,
                    });
                }
            }
        }
        if ch.counts_production {
            production += 1;
        }
        total_events += 1;
        on_event(t, idx, &state, production);
    }
    Ok((state, production, total_events))
}

/// Runs one exact trajectory.
pub fn simulate_with<const D: usize>(
    channels: &[Channel<D>],
    initial: [u64; D],
    horizon: f64,
    seed: u64,
    opts: &SimOptions<D>,
) -> Result<Trajectory<D>> {
    let mut events: Vec<Event<D>> = Vec::new();
    let record = opts.record_events;
    let (final_state, final_production, total_events) = run_core(
        channels,
        initial,
        horizon,
        seed,
        &opts.caps,
        |time, channel, state, production| {
            if record {
                events.push(Event {
                    time,
                    channel,
                    state: *state,
                    production,
                });
            }
        },
    )?;
    Ok(Trajectory {
        initial,
        horizon,
        seed,
        events,
        events_recorded: record,
        final_state,
        final_production,
        total_events,
    })
}

/// Grid-sampling-only run: no event log is kept, only the cadlag state and
/// production counter at the given nondecreasing grid times. Memory stays
/// `O(grid)` regardless of the event count; the sampled values are
/// identical to `sample_on_grid` over a fully recorded trajectory with the
/// same seed.
pub fn simulate_sampled<const D: usize>(
    channels: &[Channel<D>],
    initial: [u64; D],
    horizon: f64,
    seed: u64,
    grid: &[f64],
    opts: &SimOptions<D>,
) -> Result<(Trajectory<D>, Vec<GridSample<D>>)> {
    let mut prev = f64::NEG_INFINITY;
    for &t in grid {
        if t < prev {
            return Err(Error::Grid("grid times must be nondecreasing".into()));
        }
        if !(0.0..=horizon).contains(&t) {
            return Err(Error::Grid(format!("grid time {t} outside [0, {horizon}]")));
        }
        prev = t;
    }
    let mut samples: Vec<GridSample<D>> = Vec::with_capacity(grid.len());
    let mut current: GridSample<D> = (initial, 0);
    let (final_state, final_production, total_events) = run_core(
        channels,
        initial,
        horizon,
        seed,
        &opts.caps,
        |time, _channel, state, production| {
            // Grid points strictly before this jump hold the pre-jump state;
            // a grid point at exactly the jump time sees the new state
            // (right-continuity) and is filled later.
            while samples.len() < grid.len() && grid[samples.len()] < time {
                samples.push(current);
            }
            current = (*state, production);
        },
    )?;
    while samples.len() < grid.len() {
        samples.push((final_state, final_production));
    }
    Ok((
        Trajectory {
            initial,
            horizon,
            seed,
            events: Vec::new(),
            events_recorded: false,
            final_state,
            final_production,
            total_events,
        },
        samples,
    ))
}

/// Runs `count` independent replicas in parallel.
///
/// Replica `i` uses seed `derive_seed(base_seed, i)`; the result is identical
/// regardless of thread count or execution order.
pub fn run_replicas<const D: usize>(
    channels: &[Channel<D>],
    initial: [u64; D],
    horizon: f64,
    base_seed: u64,
    count: usize,
    opts: &SimOptions<D>,
) -> Result<Vec<Trajectory<D>>> {
    if count == 0 {
        return Err(Error::InvalidParams("replica count must be >= 1".into()));
    }
    (0..count as u64)
        .into_par_iter()
        .map(|i| simulate_with(channels, initial, horizon, derive_seed(base_seed, i), opts))
        .collect()
}

/// Piecewise-constant, right-continuous evaluation of a trajectory at the
/// given nondecreasing grid times.
pub fn sample_on_grid<const D: usize>(
    traj: &Trajectory<D>,
    grid: &[f64],
) -> Result<Vec<GridSample<D>>> {
    if !traj.events_recorded {
        return Err(Error::Grid("event log was not recorded".into()));
    }
    let mut out = Vec::with_capacity(grid.len());
    let mut idx = 0usize;
    let mut prev = f64::NEG_INFINITY;
    let mut current = (traj.initial, 0u64);
    for &t in grid {
        if t < prev {
            return Err(Error::Grid("grid times must be nondecreasing".into()));
        }
        if !(0.0..=traj.horizon).contains(&t) {
            return Err(Error::Grid(format!(
                "grid time {t} outside [0, {}]",
                traj.horizon
            )));
        }
        while idx < traj.events.len() && traj.events[idx].time <= t {
            current = (traj.events[idx].state, traj.events[idx].production);
            idx += 1;
        }
        out.push(current);
        prev = t;
    }
    Ok(out)
}

/// Uniform grid with `points + 1` samples covering `[0, horizon]`.
pub fn uniform_grid(horizon: f64, points: usize) -> Vec<f64> {
    if points == 0 {
        return vec![0.0];
    }
    (0..=points)
        .map(|i| horizon * i as f64 / points as f64)
        .collect()
}

/// Writes `(time, coords..., P)` rows at the given grid times.
pub fn write_grid_csv<const D: usize, W: Write>(
    w: &mut W,
    names: &[&str; D],
    traj: &Trajectory<D>,
    grid: &[f64],
) -> Result<()> {
    write_samples_csv(w, names, grid, &sample_on_grid(traj, grid)?)
}

/// Writes `(time, coords..., P)` rows from precomputed grid samples.
pub fn write_samples_csv<const D: usize, W: Write>(
    w: &mut W,
    names: &[&str; D],
    grid: &[f64],
    samples: &[GridSample<D>],
) -> Result<()> {
    writeln!(w, "time,{},P", names.join(","))?;
    for (t, (state, prod)) in grid.iter().zip(samples) {
        let cols: Vec<String> = state.iter().map(|v| v.to_string()).collect();
        writeln!(w, "{t},{},{prod}", cols.join(","))?;
    }
    Ok(())
}

/// Writes the full event log as `(time, coords..., P)` rows.
pub fn write_events_csv<const D: usize, W: Write>(
    w: &mut W,
    names: &[&str; D],
    traj: &Trajectory<D>,
) -> Result<()> {
    if !traj.events_recorded {
        return Err(Error::Grid("event log was not recorded".into()));
    }
    writeln!(w, "time,{},P", names.join(","))?;
    let cols: Vec<String> = traj.initial.iter().map(|v| v.to_string()).collect();
    writeln!(w, "0,{},0", cols.join(","))?;
    for e in &traj.events {
        let cols: Vec<String> = e.state.iter().map(|v| v.to_string()).collect();
        writeln!(w, "{},{},{}", e.time, cols.join(","), e.production)?;
    }
    Ok(())
}
