use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sparse-lqr"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn generate(dir: &Path, kind: &str, size: &str) -> String {
    let out = run(&["generate", "--kind", kind, "--size", size, "--seed", "3", "--out", dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    dir.join("problem.json").to_str().unwrap().to_owned()
}

#[test]
fn solve_writes_report_trace_and_gain() {
    let dir = tempfile::tempdir().unwrap();
    let problem = generate(dir.path(), "mass-spring", "5");
    let out_dir = dir.path().join("solve");
    fs::create_dir(&out_dir).unwrap();
    let out = run(&["solve", "--problem", &problem, "--lambda", "0.5", "--out", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));

    let report = read_json(&out_dir.join("report.json"));
    assert_eq!(report["status"], "ok");
    assert_eq!(report["termination"], "converged");
    for field in ["objective_F", "objective_J", "penalty_g", "nnz", "iterations", "optimality", "stability_margin", "K"] {
        assert!(!report[field].is_null(), "missing {field}");
    }
    assert!(report["stability_margin"].as_f64().unwrap() > 0.0);

    let trace = fs::read_to_string(out_dir.join("trace.csv")).unwrap();
    assert!(trace.starts_with("iter,time_s,objective_F,objective_J,penalty_g,nnz,active_set_size,step_alpha,direction"));
    let gain = fs::read_to_string(out_dir.join("gain.csv")).unwrap();
    assert_eq!(gain.lines().count(), 5);
}

#[test]
fn ista_solver_is_selectable() {
    let dir = tempfile::tempdir().unwrap();
    let problem = generate(dir.path(), "mass-spring", "4");
    let out = run(&["solve", "--problem", &problem, "--lambda", "0.5", "--solver", "ista", "--max-iter", "2000",
        "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(read_json(&dir.path().join("report.json"))["solver"], "ista");
}

#[test]
fn lqr_then_polish_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let problem = generate(dir.path(), "random-network", "6");
    let d = dir.path().to_str().unwrap();
    let out = run(&["lqr", "--problem", &problem, "--out", d]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let lqr_j = read_json(&dir.path().join("report.json"))["objective_J"].as_f64().unwrap();

    let polish_dir = dir.path().join("polish");
    fs::create_dir(&polish_dir).unwrap();
    let gain = dir.path().join("gain.csv");
    let out = run(&["polish", "--problem", &problem, "--gain", gain.to_str().unwrap(), "--out",
        polish_dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let polished = read_json(&polish_dir.join("report.json"))["objective_J"].as_f64().unwrap();
    assert!((polished - lqr_j).abs() <= 1e-8 * lqr_j.abs());
}

#[test]
fn sweep_and_bench_write_tables() {
    let dir = tempfile::tempdir().unwrap();
    let problem = generate(dir.path(), "mass-spring", "4");
    let d = dir.path().to_str().unwrap();
    let out = run(&["sweep", "--problem", &problem, "--count", "4", "--lambda-min", "0.1", "--lambda-max", "10",
        "--out", d]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let sweep = fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    assert_eq!(sweep.lines().count(), 5);
    assert!(sweep.lines().next().unwrap().contains("performance_gap"));

    let out = run(&["bench", "--problem", &problem, "--lambda", "1", "--max-iter", "500", "--out", d]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let bench = fs::read_to_string(dir.path().join("bench.csv")).unwrap();
    assert!(bench.contains("newton-cd") && bench.contains("ista"));
}

#[test]
fn generation_is_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let pa = generate(a.path(), "random-network", "8");
    let pb = generate(b.path(), "random-network", "8");
    assert_eq!(fs::read(pa).unwrap(), fs::read(pb).unwrap());
}

#[test]
fn usage_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    assert_eq!(run(&["solve", "--problem", "x.json", "--solver", "simplex", "--out", d]).status.code(), Some(2));
    assert_eq!(run(&["generate", "--kind", "mass-spring", "--size", "0", "--out", d]).status.code(), Some(2));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn missing_input_reports_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["solve", "--problem", "nowhere.json", "--lambda", "1", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("nowhere.json"));
    let report = read_json(&dir.path().join("report.json"));
    assert_eq!(report["status"], "error");
    assert!(report["objective_F"].is_null());
}
