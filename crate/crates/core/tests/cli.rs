//! The `cox-overfit` binary: outputs and exit codes.

use std::path::Path;
use std::process::Command;

fn cli(out: &Path) -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_cox-overfit"));
    c.arg("--out").arg(out).env("RUST_LOG", "error");
    c
}

#[test]
fn simulate_then_fit() {
    let dir = tempfile::tempdir().unwrap();
    let st = cli(dir.path())
        .args(["--seed", "3", "simulate", "--n", "200", "--p", "20"])
        .output()
        .unwrap()
        .status;
    assert!(st.success());
    let data = dir.path().join("data.csv");
    assert!(data.exists());
    let st = cli(dir.path()).arg("fit").arg(&data).output().unwrap().status;
    assert_eq!(st.code(), Some(0));
    for f in ["beta_hat.csv", "breslow.csv", "fit.json"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    let fit: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("fit.json")).unwrap()).unwrap();
    assert_eq!(fit["converged"], true);
    assert!(fit["markers"]["kappa_hat"].as_f64().unwrap() > 0.5);
}

#[test]
fn fit_fails_on_separated_data() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("sep.csv");
    // the larger the covariate, the earlier the event: the likelihood has no maximum
    let mut text = String::from("time,event,z1\n");
    for i in 0..8 {
        text.push_str(&format!("{},1,{}\n", i + 1, 8 - i));
    }
    std::fs::write(&data, text).unwrap();
    let out = cli(dir.path()).arg("fit").arg(&data).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("separation"));
}

#[test]
fn bad_input_is_fatal() {
    let dir = tempfile::tempdir().unwrap();
    let st = cli(dir.path())
        .arg("fit")
        .arg(dir.path().join("missing.csv"))
        .output()
        .unwrap()
        .status;
    assert_eq!(st.code(), Some(1));
    let st = cli(dir.path())
        .args(["experiment", "--scenario", "no_such_scenario"])
        .output()
        .unwrap()
        .status;
    assert_eq!(st.code(), Some(1));
}

#[test]
fn rs_solve_writes_solution() {
    let dir = tempfile::tempdir().unwrap();
    let st = cli(dir.path())
        .args(["rs-solve", "--zeta", "0.2", "--m", "10000"])
        .output()
        .unwrap()
        .status;
    assert!(st.success());
    let sol: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("rs_solution.json")).unwrap()).unwrap();
    assert!(sol["kappa"].as_f64().unwrap() > 1.0);
    assert!(dir.path().join("rs_lambda.csv").exists());
}

#[test]
fn experiment_from_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.cfg");
    std::fs::write(
        &cfg,
        "scenario = figure2_overlaps\nn = 60\nzetas = 0.2\nreplicates = 2\nm = 10000\nrs_repeats = 1\n",
    )
    .unwrap();
    let out = dir.path().join("run");
    let st = cli(&out)
        .args(["--threads", "1", "experiment", "--config"])
        .arg(&cfg)
        .output()
        .unwrap()
        .status;
    assert_eq!(st.code(), Some(0));
    assert!(out.join("manifest.json").exists());
    assert!(out.join("figure2_overlaps.csv").exists());
}
