//! End-to-end checks of the command-line interface: output contents, file
//! formats, exit codes, and byte-level reproducibility.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_stringent"))
}

fn write(path: &Path, text: &str) {
    fs::write(path, text).unwrap();
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

const OPT_CONFIG: &str = r#"{
    "k_RS": 1.0, "k_SR": 1.0, "k_LR": 1.0, "k_Q0": 1.0,
    "k_0Q": 1.0, "k_RI": 1.0, "k_IL": 2.0, "k_QU": 1.0,
    "N": 1000, "C_M": 2.0, "C_U": 10.0, "regulated": true
}"#;

const STABLE_CONFIG: &str = r#"{
    "k_RS": 1.0, "k_SR": 1.0, "k_LR": 1.0, "k_Q0": 1.0,
    "k_0Q": 2.0, "k_RI": 1.0, "k_IL": 1.0, "k_QU": 1.0,
    "N": 500, "C_M": 2.0, "C_U": 1.0, "regulated": true
}"#;

#[test]
fn classify_prints_regime_and_threshold() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("model.json");
    write(&cfg, OPT_CONFIG);
    let out = bin()
        .args(["classify", "--config"])
        .arg(&cfg)
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("regime: OptimalSequestration"), "{text}");
    assert!(text.contains("critical_C_U: 0.75"), "{text}");
    assert!(text.contains("fixed_point: [0.5, 0.75]"), "{text}");
    assert!(text.contains("stable: true"), "{text}");
}

#[test]
fn ode_matches_linear_closed_form() {
    // Stable ODE q' = 2 - 1 - q from q0 = 0: q(1) = 1 - exp(-1).
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("model.json");
    write(&cfg, STABLE_CONFIG);
    let csv = dir.path().join("ode.csv");
    let out = bin()
        .args(["ode", "--config"])
        .arg(&cfg)
        .args(["--horizon", "1", "--x0", "0", "--out"])
        .arg(&csv)
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = fs::read_to_string(&csv).unwrap();
    let last = text.lines().last().unwrap();
    let cols: Vec<&str> = last.split(',').collect();
    assert_eq!(cols.len(), 3); // time, q, production_limit
    let q1: f64 = cols[1].parse().unwrap();
    let want = 1.0 - (-1.0f64).exp();
    assert!((q1 - want).abs() < 1e-6, "q(1) = {q1}");
}

#[test]
fn missing_config_key_exits_with_code_1() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("model.json");
    write(&cfg, r#"{"k_RS": 1.0, "N": 100}"#);
    let out = bin()
        .args(["classify", "--config"])
        .arg(&cfg)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("error"), "{err}");
}

#[test]
fn invalid_parameter_value_exits_with_code_1() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("model.json");
    write(
        &cfg,
        &STABLE_CONFIG.replace("\"k_LR\": 1.0", "\"k_LR\": -1.0"),
    );
    let out = bin()
        .args(["classify", "--config"])
        .arg(&cfg)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn simulate_writes_reproducible_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("model.json");
    write(&cfg, STABLE_CONFIG);
    let run = |out_dir: &Path| {
        let out = bin()
            .args(["simulate", "--config"])
            .arg(&cfg)
            .args([
                "--horizon",
                "1",
                "--seed",
                "7",
                "--grid",
                "20",
                "--events",
                "--out",
            ])
            .arg(out_dir)
            .output()
            .unwrap();
        assert!(
            out.status.success(),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
    };
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    run(&a);
    run(&b);
    for name in ["trajectory.csv", "events.csv", "metadata.json"] {
        let fa = fs::read(a.join(name)).unwrap();
        let fb = fs::read(b.join(name)).unwrap();
        assert!(!fa.is_empty());
        assert_eq!(fa, fb, "{name} differs between identical runs");
    }
    let header = fs::read_to_string(a.join("trajectory.csv")).unwrap();
    assert!(header.starts_with("time,s,r,l,q,u,P"));
    let meta = fs::read_to_string(a.join("metadata.json")).unwrap();
    assert!(meta.contains("\"rounding_rule\""));
    assert!(meta.contains("\"seed\": 7"));
}

#[test]
fn fastdist_emits_a_normalized_pmf() {
    let out = bin()
        .args(["fastdist", "--fastinv", "1,1,1,1"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.starts_with("x1,x2,x3,probability"));
    let total: f64 = text
        .lines()
        .skip(1)
        .map(|l| l.rsplit(',').next().unwrap().parse::<f64>().unwrap())
        .sum();
    assert!((total - 1.0).abs() < 1e-9, "total {total}");
}

#[test]
fn fastdist_regime_law_from_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("model.json");
    write(&cfg, OPT_CONFIG);
    let out = bin()
        .args(["fastdist", "--config"])
        .arg(&cfg)
        .args(["--slow", "0.5,0.75"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = stdout(&out);
    // pmf(0,0,0) = exp(-(2/3 + 2/18.5 + 4/3)).
    let first = text.lines().nth(1).unwrap();
    assert!(first.starts_with("0,0,0,"));
    let p: f64 = first.rsplit(',').next().unwrap().parse().unwrap();
    let want = (-(2.0 / 3.0 + 2.0 / 18.5 + 4.0 / 3.0f64)).exp();
    assert!((p - want).abs() < 1e-12, "pmf(0,0,0) = {p}, want {want}");
}

#[test]
fn verify_exit_codes_reflect_tolerances() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.json");
    // Small, fast experiment that comfortably passes its (default) gates.
    write(
        &cfg,
        r#"{
            "k_RS": 1.0, "k_SR": 1.0, "k_LR": 1.0, "k_Q0": 1.0,
            "k_0Q": 2.0, "k_RI": 1.0, "k_IL": 1.0, "k_QU": 1.0,
            "C_M": 2.0, "C_U": 1.0, "regulated": true,
            "N": [200], "replicas": 4, "horizon": 1.0,
            "grid_points": 25, "fast_windows": 3,
            "initial": {"q0": 1.0}, "base_seed": 99,
            "tolerances": {"slow_sup": 0.5, "fast_tv": 0.5, "production_rel": 0.5}
        }"#,
    );
    let report_dir = dir.path().join("out");
    let out = bin()
        .args(["verify", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&report_dir)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    assert!(report_dir.join("report.json").exists());
    assert!(report_dir.join("n200_ode.csv").exists());
    assert!(report_dir.join("n200_slow_mean.csv").exists());
    assert!(report_dir.join("n200_occupation.csv").exists());

    // An unreachable tolerance flips the exit code to 2.
    let strict = dir.path().join("strict.json");
    write(
        &strict,
        &fs::read_to_string(&cfg)
            .unwrap()
            .replace("\"slow_sup\": 0.5", "\"slow_sup\": 1e-9"),
    );
    let out = bin()
        .args(["verify", "--config"])
        .arg(&strict)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2), "{}", stdout(&out));
}

#[test]
fn sweep_writes_a_classification_map() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sweep.json");
    write(
        &cfg,
        r#"{
            "k_RS": 1.0, "k_SR": 1.0, "k_LR": 1.0, "k_Q0": 1.0,
            "k_0Q": 1.0, "k_RI": 1.0, "k_IL": 2.0, "k_QU": 1.0,
            "N": 100, "C_M": 2.0, "C_U": 1.0, "regulated": true,
            "sweep": {
                "x": {"key": "k_0Q", "min": 0.5, "max": 3.0, "steps": 6},
                "y": {"key": "C_U", "min": 0.25, "max": 1.25, "steps": 5}
            }
        }"#,
    );
    let out = bin()
        .args(["sweep", "--config"])
        .arg(&cfg)
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.starts_with("k_0Q,C_U,regime,critical_cu"));
    assert_eq!(text.lines().count(), 1 + 30);
    assert!(text.contains("Stable"));
}
