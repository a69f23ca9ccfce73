//! End-to-end command tests against the built binary: output layout, exit
//! codes, override handling, and the dimension-cap environment variable.

use std::path::Path;
use std::process::{Command, Output};

use qbe_core::model::ModelConfig;

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_qbesim")
}

fn write_canonical_config(dir: &Path) -> std::path::PathBuf {
    let path = dir.join("model.json");
    let text = serde_json::to_string_pretty(&ModelConfig::canonical()).unwrap();
    std::fs::write(&path, text).unwrap();
    path
}

fn run(args: &[&str]) -> Output {
    Command::new(bin()).args(args).output().unwrap()
}

fn run_with_env(args: &[&str], key: &str, value: &str) -> Output {
    Command::new(bin()).args(args).env(key, value).output().unwrap()
}

#[test]
fn analyze_writes_records_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let model = write_canonical_config(dir.path());
    let out = dir.path().join("out");
    let output = run(&[
        "analyze",
        "--model",
        model.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(output.status.success());

    let records = std::fs::read_to_string(out.join("records.csv")).unwrap();
    let mut lines = records.lines();
    assert_eq!(lines.next().unwrap(), "p,i,j,e0,e_exact,lambda,epsilon,overlap");
    assert_eq!(lines.count(), 8, "one row per (p,i,j) triple");

    let summary = std::fs::read_to_string(out.join("summary.txt")).unwrap();
    assert!(summary.contains("chosen_i0 = 0"));
    assert!(summary.contains("tau = "));
}

#[test]
fn malformed_config_exits_2_and_names_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, r#"{"dims": [2,2,2], "mystery": 1}"#).unwrap();
    let output = run(&[
        "analyze",
        "--model",
        path.to_str().unwrap(),
        "--out",
        dir.path().join("out").to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("mystery"), "stderr: {stderr}");
}

#[test]
fn zero_coupling_override_reports_infinite_plateau() {
    let dir = tempfile::tempdir().unwrap();
    let model = write_canonical_config(dir.path());
    let out = dir.path().join("out");
    let output = run(&[
        "analyze",
        "--model",
        model.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--override",
        "h_qb.c=0.0",
    ]);
    assert!(output.status.success());
    let summary = std::fs::read_to_string(out.join("summary.txt")).unwrap();
    assert!(summary.contains("eps_max = 0.0000000000000000e0"), "{summary}");
    assert!(summary.contains("tau = inf"), "{summary}");
}

#[test]
fn overwrite_needs_force() {
    let dir = tempfile::tempdir().unwrap();
    let model = write_canonical_config(dir.path());
    let out = dir.path().join("out");
    let args = [
        "analyze",
        "--model",
        model.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ];
    assert!(run(&args).status.success());
    let second = run(&args);
    assert_eq!(second.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&second.stderr).contains("--force"));
    let mut forced: Vec<&str> = args.to_vec();
    forced.push("--force");
    assert!(run(&forced).status.success());
}

#[test]
fn evolve_shows_plateau_then_decay_for_asymmetric_rows() {
    let dir = tempfile::tempdir().unwrap();
    let model = write_canonical_config(dir.path());
    let out = dir.path().join("out");
    let output = run(&[
        "evolve",
        "--model",
        model.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--override",
        "h_qb.gamma=[[1.0,-1.0],[-1.0,3.0]]",
        "--points",
        "256",
    ]);
    assert!(output.status.success());
    let trace = std::fs::read_to_string(out.join("trace.csv")).unwrap();
    let mut lines = trace.lines();
    assert_eq!(lines.next().unwrap(), "time,z_abs_0_1,re_rho_0_1,im_rho_0_1,qb_fidelity");
    let fidelities: Vec<f64> = lines
        .map(|line| line.rsplit(',').next().unwrap().parse().unwrap())
        .collect();
    assert_eq!(fidelities.len(), 256);
    assert!((fidelities[0] - 1.0).abs() < 1e-10);
    let min = fidelities.iter().copied().fold(f64::INFINITY, f64::min);
    assert!(min < 0.9, "no decay visible over five plateau durations: min = {min}");
    assert!(out.join("fidelity.svg").exists());
    assert!(out.join("z_abs.svg").exists());
}

#[test]
fn sweep_writes_one_row_per_rung_and_the_fitted_slope() {
    let dir = tempfile::tempdir().unwrap();
    let model = write_canonical_config(dir.path());
    let out = dir.path().join("out");
    let output = run(&[
        "sweep",
        "--model",
        model.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(output.status.success());
    let csv = std::fs::read_to_string(out.join("scaling.csv")).unwrap();
    assert_eq!(csv.lines().count(), 6, "header plus five rungs");
    let text = std::fs::read_to_string(out.join("scaling.txt")).unwrap();
    assert!(text.contains("slope = "));
    assert!(out.join("scaling.svg").exists());
}

#[test]
fn baseline_matches_closed_form_in_the_csv() {
    let dir = tempfile::tempdir().unwrap();
    let model = write_canonical_config(dir.path());
    let out = dir.path().join("out");
    let output = run(&[
        "baseline",
        "--model",
        model.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--t-end",
        "200.0",
    ]);
    assert!(output.status.success());
    let csv = std::fs::read_to_string(out.join("baseline.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "time,re_z_closed,im_z_closed,abs_z_closed,abs_z_simulated"
    );
    for line in lines {
        let fields: Vec<f64> = line.split(',').map(|v| v.parse().unwrap()).collect();
        assert!((fields[3] - fields[4]).abs() < 1e-10, "closed vs simulated: {line}");
    }
}

#[test]
fn protocol_failure_paths_use_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let model = write_canonical_config(dir.path());
    // Invalid tracked pair.
    let output = run(&[
        "protocol",
        "--model",
        model.to_str().unwrap(),
        "--out",
        dir.path().join("o1").to_str().unwrap(),
        "--pairs",
        "0:9",
    ]);
    assert_eq!(output.status.code(), Some(2));
    // Missing model file.
    let output = run(&[
        "protocol",
        "--model",
        dir.path().join("nope.json").to_str().unwrap(),
        "--out",
        dir.path().join("o2").to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn dimension_cap_env_var_is_honored() {
    let dir = tempfile::tempdir().unwrap();
    let model = write_canonical_config(dir.path());
    let out = dir.path().join("out");
    let output = run_with_env(
        &[
            "analyze",
            "--model",
            model.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ],
        "QBESIM_MAX_DIM",
        "4",
    );
    assert_eq!(output.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("maximum"), "stderr: {stderr}");
}
