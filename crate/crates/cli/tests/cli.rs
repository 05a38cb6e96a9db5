use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn qcausal(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qcausal")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", stdout(o)))
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

/// Data rows of a CSV with a leading comment line and a header.
fn csv_rows(text: &str) -> (String, Vec<String>, Vec<Vec<String>>) {
    let mut lines = text.lines();
    let comment = lines.next().unwrap().to_string();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines.map(|l| l.split(',').map(String::from).collect()).collect();
    (comment, header, rows)
}

const TOY: &[&str] = &["--q", "2", "--p", "0.08", "--pstar", "0.08", "--eps", "0.3", "--n", "256", "--theta", "0.03125"];

#[test]
fn capacity_reports_the_zero_region() {
    let o = qcausal(&["capacity", "--q", "2", "--p", "0.3"]);
    assert_eq!(code(&o), 0);
    let v = json(&o);
    assert_eq!(v["value"], 0.0);
    assert_eq!(v["zero_region"], true);
}

#[test]
fn capacity_grid_oracle_agrees() {
    let args = ["capacity", "--q", "3", "--p", "0.1", "--pstar", "0.2"];
    let fast = json(&qcausal(&args))["value"].as_f64().unwrap();
    let mut grid_args = args.to_vec();
    grid_args.extend(["--grid-oracle", "--grid-points", "200000"]);
    let grid = json(&qcausal(&grid_args))["value"].as_f64().unwrap();
    assert!((fast - grid).abs() < 1e-6, "{fast} vs {grid}");
    assert!((json(&qcausal(&["capacity", "--q", "2", "--p", "0", "--pstar", "0.1"]))["value"].as_f64().unwrap() - 0.8).abs() < 1e-9);
}

#[test]
fn theta_defaults_to_the_table_value() {
    let o = qcausal(&["trajectory", "--q", "2", "--p", "0.125", "--pstar", "0", "--eps", "0.3", "--n", "4000"]);
    assert_eq!(code(&o), 0);
    let (comment, header, rows) = csv_rows(&stdout(&o));
    assert!(comment.starts_with("# qcausal trajectory build="));
    assert!(comment.contains("theta=0.0025") && comment.contains("chunk_len=10"), "{comment}");
    assert_eq!(header, ["t", "t_minus_lambda", "p_bar", "p_hat", "p_tilde", "list_ok", "energy_ok"]);
    assert_eq!(rows.len(), 399);
    assert_eq!(rows[0][0], "10");
    assert!(rows.iter().any(|r| r[5] == "true"));
}

#[test]
fn non_dividing_chunk_is_a_usage_error() {
    let o = qcausal(&["--json-errors", "trajectory", "--n", "1000", "--theta", "0.003", "--p", "0.1", "--pstar", "0", "--eps", "0.3"]);
    assert_eq!(code(&o), 2);
    let v = json(&o);
    assert_eq!(v["status"], "usage_error");
    assert!(v["violations"][0].as_str().unwrap().contains("does not divide"));
}

#[test]
fn diagnostics_list_every_violation() {
    let o = qcausal(&[
        "--json-errors", "region", "--theoretical", "--theta", "0.01", "--secrets", "3", "--p", "0.1", "--pstar", "0", "--eps", "0.3", "--n", "100",
    ]);
    assert_eq!(code(&o), 2);
    let v: Vec<String> = serde_json::from_value(json(&o)["violations"].clone()).unwrap();
    assert_eq!(v.len(), 2, "{v:?}");
    assert!(v[0].contains("theta") && v[1].contains("secret"));

    let o = qcausal(&["--json-errors", "trajectory", "--q", "2"]);
    let v: Vec<String> = serde_json::from_value(json(&o)["violations"].clone()).unwrap();
    assert_eq!(v, ["missing --p", "missing --pstar", "missing --eps", "missing --n"]);
}

#[test]
fn simulate_rejects_the_zero_region() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("o");
    let o = qcausal(&["simulate", "--q", "2", "--p", "0.3", "--pstar", "0", "--eps", "0.3", "--n", "64", "--theta", "0.125", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("positive capacity"));
    assert!(!out.exists());
}

#[test]
fn unknown_flags_fail_closed() {
    assert_eq!(code(&qcausal(&["capacity", "--p", "0.1", "--bogus"])), 2);
    assert_eq!(code(&qcausal(&["frobnicate"])), 2);
    let o = qcausal(&["--json-errors", "capacity", "--p", "0.1", "--bogus"]);
    assert_eq!(code(&o), 2);
    assert_eq!(json(&o)["status"], "usage_error");
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn simulate_writes_summary_and_transcripts() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        dir.path(),
        "cfg.json",
        r#"{"q": 2, "p": 0.08, "pstar": 0.08, "eps": 0.3, "n": 256, "theta": 0.03125,
            "messages": 8, "secrets": 2, "seed": 5, "trials": 500,
            "adversary": {"kind": "babble_push", "allow_clamp": true}}"#,
    );
    let out = dir.path().join("run");
    let o = qcausal(&["simulate", "--config", &cfg, "--trials", "12", "--out", out.to_str().unwrap(), "--keep-transcripts"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let summary: Value = serde_json::from_str(&std::fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["trials"], 12);
    assert_eq!(summary["config"]["master_seed"], 5);
    assert_eq!(summary["config"]["adversary"]["kind"], "babble_push");
    assert_eq!(summary["message_count"], 8);
    assert_eq!(summary["violation_count"], 0);
    let outcomes: u64 = ["decode_success_count", "miscorrection_count", "ambiguous_count", "exhausted_count"]
        .iter()
        .map(|k| summary[k].as_u64().unwrap())
        .sum();
    assert_eq!(outcomes, 12);
    assert!(summary["push_stats"]["disagreements"].as_u64().is_some());
    assert!(summary["error_rate"]["wilson_high"].as_f64().unwrap() <= 1.0);
    let transcripts = std::fs::read_dir(out.join("transcripts")).unwrap().count();
    assert_eq!(transcripts, 12);
    let t0: Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("transcripts/trial-000000.json")).unwrap()).unwrap();
    assert_eq!(t0["version"], 1);
    assert_eq!(t0["actions"].as_str().unwrap().len(), 256);

    let again = dir.path().join("again");
    qcausal(&["simulate", "--config", &cfg, "--trials", "12", "--out", again.to_str().unwrap()]);
    assert_eq!(
        std::fs::read_to_string(out.join("summary.json")).unwrap(),
        std::fs::read_to_string(again.join("summary.json")).unwrap()
    );
}

#[test]
fn config_rejects_unknown_keys() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "cfg.json", r#"{"q": 2, "colour": "blue"}"#);
    let o = qcausal(&["--json-errors", "region", "--config", &cfg]);
    assert_eq!(code(&o), 2);
    assert!(json(&o)["violations"][0].as_str().unwrap().contains("colour"));
}

#[test]
fn codebook_round_trip_feeds_simulate() {
    let dir = TempDir::new().unwrap();
    let file = dir.path().join("cb.bin");
    let mut args = vec!["codebook", "gen", "--messages", "4", "--secrets", "2", "--seed", "3", "--out", file.to_str().unwrap()];
    args.extend(TOY);
    let o = qcausal(&args);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let made = json(&o);
    let inspected = json(&qcausal(&["codebook", "inspect", file.to_str().unwrap()]));
    assert_eq!(made, inspected);
    assert_eq!(inspected["symbols"], 256 * 4 * 2);
    assert_eq!(inspected["chunk_len"], 8);

    let out = dir.path().join("run");
    let mut sim = vec!["simulate", "--messages", "4", "--secrets", "2", "--seed", "3", "--trials", "5", "--codebook", file.to_str().unwrap()];
    sim.extend(TOY);
    sim.extend(["--out", out.to_str().unwrap()]);
    assert_eq!(code(&qcausal(&sim)), 0);

    let mut wrong = vec!["simulate", "--messages", "8", "--secrets", "2", "--trials", "5", "--codebook", file.to_str().unwrap()];
    wrong.extend(TOY);
    wrong.extend(["--out", out.to_str().unwrap()]);
    assert_eq!(code(&qcausal(&wrong)), 2);
}

#[test]
fn region_emits_every_curve() {
    let o = qcausal(&["region", "--q", "2", "--p", "0.125", "--pstar", "0", "--eps", "0.3", "--n", "4000"]);
    assert_eq!(code(&o), 0);
    let (_, header, rows) = csv_rows(&stdout(&o));
    assert_eq!(header, ["curve", "t", "t_minus_lambda", "value"]);
    for id in ["1", "2", "3", "4", "p_hat"] {
        assert!(rows.iter().any(|r| r[0] == id), "curve {id} missing");
    }
}

#[test]
fn lambda_profile_shifts_t_minus_lambda() {
    let dir = TempDir::new().unwrap();
    let counts: Vec<usize> = (0..=32).map(|k| k.min(20)).collect();
    let path = write(dir.path(), "lambda.json", &serde_json::to_string(&counts).unwrap());
    let mut args = vec!["trajectory", "--lambda-profile", &path];
    args.extend(TOY);
    let o = qcausal(&args);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let (_, _, rows) = csv_rows(&stdout(&o));
    assert_eq!(rows.len(), 31);
    assert_eq!(rows[30][0], "248");
    assert_eq!(rows[30][1], "228");

    let bad = write(dir.path(), "bad.json", "[0, 1, 2]");
    let mut args = vec!["trajectory", "--lambda-profile", &bad];
    args.extend(TOY);
    assert_eq!(code(&qcausal(&args)), 2);
}

#[test]
fn verify_grid_passes_and_fault_injection_fails() {
    let o = qcausal(&["verify", "--draws", "12", "--json"]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    let report = json(&o);
    assert_eq!(report["draws"], 36);
    assert!(report["claims"].as_array().unwrap().iter().all(|c| c["failures"] == 0));

    let o = qcausal(&["verify", "--draws", "40", "--debug-margin-scale", "0.5"]);
    assert_eq!(code(&o), 1, "{}", stdout(&o));
    assert!(stdout(&o).contains("FAIL"));
}

#[test]
fn verify_single_point_prints_a_table() {
    let o = qcausal(&["verify", "--q", "2", "--p", "0.125", "--pstar", "0", "--eps", "0.1"]);
    assert_eq!(code(&o), 0);
    let (comment, header, rows) = csv_rows(&stdout(&o));
    assert!(comment.contains("n=7200"), "{comment}");
    assert_eq!(header[0], "t");
    assert!(!rows.is_empty());
    assert!(rows.iter().all(|r| r[5] == "true" && r[8] == "true"));
}

#[test]
fn capacity_surface_has_a_row_per_grid_point() {
    let o = qcausal(&["capacity-surface", "--qs", "2,5", "--p-steps", "4", "--pstar-steps", "3"]);
    assert_eq!(code(&o), 0);
    let (comment, header, rows) = csv_rows(&stdout(&o));
    assert!(comment.starts_with("# qcausal capacity-surface"));
    assert_eq!(header, ["q", "p", "pstar", "capacity"]);
    assert_eq!(rows.len(), 2 * 5 * 4);
}
