//! Command-line interface: regime classification, single trajectories,
//! limiting ODEs, closed-form fast laws, convergence experiments, and
//! parameter sweeps.
//!
//! Exit codes: 0 success, 1 validation/configuration error, 2 tolerance
//! failure in `verify`.

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use stringent::harness::{
    classify_model, run_experiment, run_sweep, ExperimentConfig, ModelConfig, SweepConfig,
    ROUNDING_RULE,
};
use stringent::limits::{default_dt, fixed_point, integrate, limiting_ode, production_limit};
use stringent::model::{build_network, LimitFamily, NetState, SPECIES};
use stringent::queues::{fastinv_dist, regime_fast_dist};
use stringent::ssa::{
    sample_on_grid, simulate_sampled, simulate_with, uniform_grid, write_events_csv,
    write_samples_csv, SimOptions,
};
use stringent::{Error, Result};

#[derive(Parser)]
#[command(
    name = "stringent",
    version,
    about = "Simulation and verification toolkit for a sequestration-regulated production network"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Print the asymptotic regime, the critical C_U, the fixed point, and
    /// its stability
    Classify(ClassifyArgs),
    /// Simulate one exact trajectory and write grid-sampled CSV output
    Simulate(SimulateArgs),
    /// Integrate the limiting ODE and write (t, state, production) CSV
    Ode(OdeArgs),
    /// Emit a closed-form fast-process pmf as CSV
    Fastdist(FastdistArgs),
    /// Run a convergence experiment from a JSON config
    Verify(VerifyArgs),
    /// Write a regime-classification map over a two-parameter grid
    Sweep(SweepArgs),
}

#[derive(Args)]
struct ClassifyArgs {
    /// Model config JSON (flat keys: k_RS ... k_QU, N, C_M, C_U, regulated)
    #[arg(long)]
    config: PathBuf,
    /// Relative tolerance for boundary detection
    #[arg(long, default_value_t = stringent::model::DEFAULT_BOUNDARY_TOL)]
    tol: f64,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    horizon: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Number of uniform grid cells for the sampled CSV
    #[arg(long, default_value_t = 200)]
    grid: usize,
    /// Also write the full event log
    #[arg(long)]
    events: bool,
    /// Initial state "s,r,l,q,u" (default: the regime's default initial
    /// condition at this N)
    #[arg(long)]
    initial: Option<String>,
    /// Hard cap on q as a multiple of N
    #[arg(long, default_value_t = 1e6)]
    q_cap_factor: f64,
    /// Output directory
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct OdeArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    horizon: f64,
    /// RK4 step (default: 1e-3 divided by the largest rate)
    #[arg(long)]
    dt: Option<f64>,
    /// Initial slow state, comma-separated (default: the fixed point)
    #[arg(long)]
    x0: Option<String>,
    /// Output CSV path (stdout when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct FastdistArgs {
    /// Model config; the regime's fast law is evaluated at `--slow` (default
    /// fixed point)
    #[arg(long, required_unless_present = "fastinv")]
    config: Option<PathBuf>,
    /// Slow variables, comma-separated
    #[arg(long)]
    slow: Option<String>,
    /// Emit the three-node shared-factor law instead:
    /// "lambda,mu_R,mu_L,mu_U"
    #[arg(long)]
    fastinv: Option<String>,
    /// Output CSV path (stdout when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Experiment config JSON
    #[arg(long)]
    config: PathBuf,
    /// Override the config's output directory
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    /// Model config JSON with a "sweep" section (two axes)
    #[arg(long)]
    config: PathBuf,
    /// Output CSV path (stdout when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_f64_list(text: &str, expect: usize, what: &str) -> Result<Vec<f64>> {
    let vals: std::result::Result<Vec<f64>, _> =
        text.split(',').map(|s| s.trim().parse::<f64>()).collect();
    let vals = vals.map_err(|e| Error::Config(format!("cannot parse {what}: {e}")))?;
    if vals.len() != expect {
        return Err(Error::Config(format!(
            "{what} needs {expect} comma-separated values, got {}",
            vals.len()
        )));
    }
    Ok(vals)
}

fn parse_u64_list(text: &str, expect: usize, what: &str) -> Result<Vec<u64>> {
    let vals: std::result::Result<Vec<u64>, _> =
        text.split(',').map(|s| s.trim().parse::<u64>()).collect();
    let vals = vals.map_err(|e| Error::Config(format!("cannot parse {what}: {e}")))?;
    if vals.len() != expect {
        return Err(Error::Config(format!(
            "{what} needs {expect} comma-separated values, got {}",
            vals.len()
        )));
    }
    Ok(vals)
}

fn family_of(cfg: &ModelConfig) -> Result<LimitFamily> {
    let regime = stringent::model::classify_regime(&cfg.params, cfg.c_m, cfg.c_u)?;
    LimitFamily::from_regime(regime, cfg.regulated)
}

fn write_or_stdout(
    out: Option<&Path>,
    body: impl FnOnce(&mut dyn std::io::Write) -> Result<()>,
) -> Result<()> {
    match out {
        Some(path) => {
            if let Some(parent) = path.parent() {
                if !parent.as_os_str().is_empty() {
                    fs::create_dir_all(parent)?;
                }
            }
            let mut f = fs::File::create(path)?;
            body(&mut f)
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            body(&mut lock)
        }
    }
}

fn cmd_classify(args: &ClassifyArgs) -> Result<()> {
    let cfg = ModelConfig::from_file(&args.config)?;
    let c = classify_model(&cfg, args.tol)?;
    println!("regime: {}", c.regime);
    println!("critical_C_U: {}", c.critical_cu);
    println!("C_U: {}", c.c_u);
    if let Some(family) = c.family {
        println!("limit_family: {family}");
    }
    if let Some(fp) = &c.fixed_point {
        let cols: Vec<String> = fp.iter().map(|v| v.to_string()).collect();
        println!("fixed_point: [{}]", cols.join(", "));
    }
    if let Some(eigs) = &c.eigenvalue_real_parts {
        let cols: Vec<String> = eigs.iter().map(|v| v.to_string()).collect();
        println!("eigenvalue_real_parts: [{}]", cols.join(", "));
        println!("stable: {}", c.stable.unwrap());
    }
    Ok(())
}

#[derive(Serialize)]
struct SimulateMetadata<'a> {
    config: &'a ModelConfig,
    scaling: stringent::model::ScalingConfig,
    rounding_rule: &'static str,
    initial: [u64; 5],
    horizon: f64,
    seed: u64,
    grid_points: usize,
    q_cap: u64,
    events_written: bool,
    total_events: u64,
    final_production: u64,
}

fn cmd_simulate(args: &SimulateArgs) -> Result<()> {
    let cfg = ModelConfig::from_file(&args.config)?;
    let scaling = cfg.scaling()?;
    let channels = build_network(&cfg.params, &scaling, cfg.regulated)?;
    let initial = match &args.initial {
        Some(text) => {
            let v = parse_u64_list(text, 5, "--initial")?;
            let st = NetState::new(v[0], v[1], v[2], v[3], v[4]);
            st.validate(&scaling)?;
            st
        }
        None => {
            let family = family_of(&cfg)?;
            let slow0 = stringent::harness::resolve_initial_fractions(
                family,
                &cfg.params,
                cfg.c_m,
                cfg.c_u,
                &Default::default(),
            )?;
            stringent::harness::default_initial(family, &scaling, &slow0)?
        }
    };
    let q_cap = (args.q_cap_factor * scaling.n as f64) as u64;
    let opts = SimOptions::default().with_cap(stringent::model::Q, q_cap);
    fs::create_dir_all(&args.out)?;
    let grid = uniform_grid(args.horizon, args.grid);
    // Without --events, run in grid-sampling-only mode: memory stays O(grid)
    // no matter how many reactions fire.
    let (traj, samples) = if args.events {
        let traj = simulate_with(
            &channels,
            initial.as_array(),
            args.horizon,
            args.seed,
            &opts,
        )?;
        let samples = sample_on_grid(&traj, &grid)?;
        let mut f = fs::File::create(args.out.join("events.csv"))?;
        write_events_csv(&mut f, &SPECIES, &traj)?;
        (traj, samples)
    } else {
        simulate_sampled(
            &channels,
            initial.as_array(),
            args.horizon,
            args.seed,
            &grid,
            &opts,
        )?
    };
    let mut f = fs::File::create(args.out.join("trajectory.csv"))?;
    write_samples_csv(&mut f, &SPECIES, &grid, &samples)?;
    let meta = SimulateMetadata {
        config: &cfg,
        scaling,
        rounding_rule: ROUNDING_RULE,
        initial: initial.as_array(),
        horizon: args.horizon,
        seed: args.seed,
        grid_points: args.grid,
        q_cap,
        events_written: args.events,
        total_events: traj.total_events,
        final_production: traj.final_production,
    };
    fs::write(
        args.out.join("metadata.json"),
        serde_json::to_string_pretty(&meta)? + "\n",
    )?;
    println!(
        "wrote {} ({} events, P(T) = {})",
        args.out.display(),
        traj.total_events,
        traj.final_production
    );
    Ok(())
}

fn cmd_ode(args: &OdeArgs) -> Result<()> {
    let cfg = ModelConfig::from_file(&args.config)?;
    let family = family_of(&cfg)?;
    let system = limiting_ode(family, &cfg.params, cfg.c_m, cfg.c_u)?;
    let x0 = match &args.x0 {
        Some(text) => parse_f64_list(text, system.dim, "--x0")?,
        None => fixed_point(family, &cfg.params, cfg.c_m, cfg.c_u)?,
    };
    let dt = args
        .dt
        .unwrap_or_else(|| default_dt(&cfg.params, cfg.c_m, cfg.c_u));
    let sol = integrate(&system, &x0, args.horizon, dt)?;
    let production = production_limit(family, &cfg.params, &sol)?;
    let names = match family {
        LimitFamily::Stable => "q",
        LimitFamily::UnderLoaded => "l",
        LimitFamily::OptimalSequestration => "s,u",
        LimitFamily::Saturation => "s,l",
    };
    write_or_stdout(args.out.as_deref(), |w| {
        writeln!(w, "time,{names},production_limit")?;
        for (i, t) in sol.times.iter().enumerate() {
            let cols: Vec<String> = sol.states[i].iter().map(|v| v.to_string()).collect();
            writeln!(w, "{t},{},{}", cols.join(","), production[i])?;
        }
        if let Some(exit) = sol.region_exit {
            eprintln!("note: left the admissible region at t = {}", exit.time);
        }
        Ok(())
    })
}

fn cmd_fastdist(args: &FastdistArgs) -> Result<()> {
    let dist = if let Some(spec) = &args.fastinv {
        let v = parse_f64_list(spec, 4, "--fastinv")?;
        fastinv_dist(v[0], v[1], v[2], v[3])?
    } else {
        let cfg = ModelConfig::from_file(args.config.as_ref().expect("clap enforces"))?;
        let family = family_of(&cfg)?;
        let slow = match &args.slow {
            Some(text) => parse_f64_list(text, family.slow_dim(), "--slow")?,
            None => fixed_point(family, &cfg.params, cfg.c_m, cfg.c_u)?,
        };
        regime_fast_dist(family, &cfg.params, cfg.c_m, cfg.c_u, &slow)?
    };
    write_or_stdout(args.out.as_deref(), |w| dist.write_csv(w))
}

fn cmd_verify(args: &VerifyArgs) -> Result<bool> {
    let mut cfg = ExperimentConfig::from_file(&args.config)?;
    if let Some(out) = &args.out {
        cfg.out_dir = Some(out.clone());
    }
    let report = run_experiment(&cfg)?;
    for r in &report.per_n {
        let tv = r
            .aggregate_tv
            .map_or("n/a".to_string(), |v| format!("{v:.4}"));
        let prod = r
            .production_rel_final
            .map_or("n/a".to_string(), |v| format!("{v:.4}"));
        println!(
            "N = {:>7}: slow sup {:.4} ({}), fast TV {} ({}), production rel {} ({})",
            r.n,
            r.mean_sup_slow,
            pass(r.slow_pass),
            tv,
            pass(r.fast_pass),
            prod,
            pass(r.production_pass),
        );
    }
    if !report.certified_start {
        println!(
            "note: start is outside the certified neighborhood of the fixed point; \
             results are reported without judgment"
        );
    }
    println!(
        "monotone in N: {} | overall: {}",
        pass(report.monotone_slow),
        pass(report.all_pass)
    );
    Ok(report.all_pass)
}

fn pass(b: bool) -> &'static str {
    if b {
        "pass"
    } else {
        "FAIL"
    }
}

fn cmd_sweep(args: &SweepArgs) -> Result<()> {
    let text = fs::read_to_string(&args.config)?;
    let cfg: SweepConfig = serde_json::from_str(&text)?;
    write_or_stdout(args.out.as_deref(), |w| run_sweep(&cfg, w))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.cmd {
        Cmd::Classify(a) => cmd_classify(a).map(|()| true),
        Cmd::Simulate(a) => cmd_simulate(a).map(|()| true),
        Cmd::Ode(a) => cmd_ode(a).map(|()| true),
        Cmd::Fastdist(a) => cmd_fastdist(a).map(|()| true),
        Cmd::Verify(a) => cmd_verify(a),
        Cmd::Sweep(a) => cmd_sweep(a).map(|()| true),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
