use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn mmes(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mmes"))
        .args(args)
        .env_remove("MMES_MAX_N")
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

const BELL: &str = r#"{"n":2,"amplitudes":[[0.7071067811865476,0.0],[0.0,0.0],[0.0,0.0],[0.7071067811865476,0.0]]}"#;

#[test]
fn theory_n4() {
    let v = json(&mmes(&["theory", "--n", "4"]));
    assert!((v["mu"].as_f64().unwrap() - 8.0 / 17.0).abs() < 1e-15);
    assert!((v["sigma2"].as_f64().unwrap() - 0.004552904753232562).abs() < 1e-12);
    assert!(v["kappa2_asymptotic"].as_f64().unwrap() > 0.0);
    assert!(v["beta_star"].as_f64().unwrap() > 0.0);
}

#[test]
fn bell_purity() {
    let dir = tempfile::tempdir().unwrap();
    let bell = dir.path().join("bell.json");
    std::fs::write(&bell, BELL).unwrap();
    let v = json(&mmes(&["purity", "--in", path(&bell), "--partition", "0"]));
    assert!((v["purity"].as_f64().unwrap() - 0.5).abs() < 1e-12);
    let v = json(&mmes(&["purity", "--in", path(&bell), "--partition", "0b10"]));
    assert!((v["purity"].as_f64().unwrap() - 0.5).abs() < 1e-12);
}

#[test]
fn anneal_n4_spec_example() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("a.json");
    let out = mmes(&["anneal", "--n", "4", "--restarts", "8", "--seed", "7", "--out", path(&report)]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("seed = 7"));
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert!((v["energy"].as_f64().unwrap() - 1.0 / 3.0).abs() < 1e-3);
    assert_eq!(v["perfect"], Value::Bool(false));

    // The report embeds the state, so it feeds straight into certify.
    let c = json(&mmes(&["certify", "--in", path(&report)]));
    assert!((c["energy"].as_f64().unwrap() - v["energy"].as_f64().unwrap()).abs() < 1e-12);
}

#[test]
fn state_pipeline_binary_and_json() {
    let dir = tempfile::tempdir().unwrap();
    let bin = dir.path().join("s.bin");
    let js = dir.path().join("s.json");
    assert!(mmes(&["haar-sample", "--n", "5", "--seed", "3", "--format", "binary", "--out", path(&bin)]).status.success());
    assert!(mmes(&["haar-sample", "--n", "5", "--seed", "3", "--out", path(&js)]).status.success());
    let a = json(&mmes(&["potential", "--in", path(&bin)]));
    let b = json(&mmes(&["potential", "--in", path(&js)]));
    assert_eq!(a, b);
    let p = json(&mmes(&["profile", "--in", path(&js)]));
    assert_eq!(p["purities"].as_array().unwrap().len(), 10);
    assert!((p["mean"].as_f64().unwrap() - a["energy"].as_f64().unwrap()).abs() < 1e-12);
}

#[test]
fn sampling_outputs_are_deterministic_and_well_formed() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("c.csv");
    let args = [
        "canonical", "--n", "4", "--beta", "10", "--steps", "6000", "--burn-in", "1000", "--thin", "5",
        "--chains", "2", "--seed", "11", "--format", "csv", "--out", path(&csv),
    ];
    assert!(mmes(&args).status.success());
    let first = std::fs::read_to_string(&csv).unwrap();
    assert!(mmes(&args).status.success());
    assert_eq!(first, std::fs::read_to_string(&csv).unwrap());
    let mut lines = first.lines();
    assert_eq!(lines.next(), Some("step,E"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 2000);
    assert!(rows.iter().all(|r| r.split(',').count() == 2));

    let s = json(&mmes(&["canonical", "--n", "4", "--beta", "10", "--steps", "6000", "--burn-in", "1000", "--seed", "11"]));
    for key in ["beta", "mean", "se", "ess", "acceptance"] {
        assert!(s.get(key).is_some(), "missing {key}");
    }

    let c = json(&mmes(&["cumulants", "--in", path(&csv), "--max-order", "2"]));
    assert_eq!(c.as_array().unwrap().len(), 2);
    let r = json(&mmes(&["reweight", "--in", path(&csv), "--beta0", "10", "--beta", "12"]));
    assert!(r["ess"].as_f64().unwrap() > 100.0);
    let h = mmes(&["hist", "--in", path(&csv), "--bins", "7"]);
    let text = String::from_utf8(h.stdout).unwrap();
    assert_eq!(text.lines().count(), 8);
    assert!(text.lines().skip(1).all(|l| l.split(',').count() == 2));
}

#[test]
fn beta_scan_csv() {
    let out = mmes(&[
        "beta-scan", "--n", "3", "--betas", "-50,0,50", "--steps", "4000", "--burn-in", "1000", "--seed", "1",
        "--format", "csv",
    ]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let means: Vec<f64> = text.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert_eq!(means.len(), 3);
    assert!(means[0] > means[1] && means[1] > means[2]);
}

#[test]
fn exit_codes() {
    let unknown = mmes(&["frobnicate"]);
    assert_eq!(unknown.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&unknown.stderr).contains("Usage"));
    assert_eq!(mmes(&["theory", "--n", "4", "--wat"]).status.code(), Some(2));
    assert_eq!(mmes(&["purity", "--in", "/nonexistent/x.json", "--partition", "0"]).status.code(), Some(1));
    assert_eq!(mmes(&["haar-sample", "--n", "25", "--seed", "0"]).status.code(), Some(1));
    assert_eq!(mmes(&["theory", "--n", "4", "--format", "csv"]).status.code(), Some(1));
}

#[test]
fn max_n_environment_override() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s.bin");
    let status = Command::new(env!("CARGO_BIN_EXE_mmes"))
        .args(["haar-sample", "--n", "21", "--seed", "0", "--format", "binary", "--out", path(&out)])
        .env("MMES_MAX_N", "21")
        .status()
        .unwrap();
    assert!(status.success());
    assert_eq!(std::fs::metadata(&out).unwrap().len(), 12 + 16 * (1 << 21));
}
