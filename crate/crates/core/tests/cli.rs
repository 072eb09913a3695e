use std::fs;
use std::path::Path;
use std::process::Command;

use serde_json::Value;
use ssd_core::assurance::{two_prior_assurance, PriorSize};
use ssd_core::cli::{run_from, CSV_HEADER, EXIT_INVALID, EXIT_NOT_ACHIEVED, EXIT_OK};

fn run(args: &[&str]) -> (i32, String, String) {
    let (mut o, mut e) = (Vec::new(), Vec::new());
    let code = run_from(std::iter::once("ssd").chain(args.iter().copied()), &mut o, &mut e);
    (code, String::from_utf8(o).unwrap(), String::from_utf8(e).unwrap())
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn costeff_size_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let curve = dir.path().join("curve.csv");
    let summary = dir.path().join("summary.json");
    let (code, out, err) = run(&[
        "size", "--scenario", "costeff", "--K", "7000", "--gamma", "0.70", "--seed", "42",
        "--curve-file", p(&curve), "--summary-file", p(&summary),
    ]);
    assert_eq!(code, EXIT_OK, "{err}");
    let v: Value = serde_json::from_str(&out).unwrap();
    let n = v["n_star"].as_u64().unwrap();
    assert!((490..=600).contains(&n), "n* = {n}");
    assert_eq!(v["curve_file"], p(&curve));
    assert_eq!(v["seed"], 42);
    for key in ["gamma", "config", "elapsed_ms", "config_hash"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    assert_eq!(fs::read_to_string(&summary).unwrap(), out);
    let csv = fs::read_to_string(&curve).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some(CSV_HEADER));
    assert!(lines.count() > 15);
}

#[test]
fn closed_form_curve_passes_through() {
    let (code, out, err) = run(&[
        "curve", "--scenario", "scalar", "--engine", "closed-form", "--delta", "0.3", "--sigma", "1.5",
        "--n-a", "4", "--n-d", "25", "--grid", "5:60:5",
    ]);
    assert_eq!(code, EXIT_OK, "{err}");
    let mut lines = out.lines();
    assert_eq!(lines.next(), Some(CSV_HEADER));
    let mut count = 0;
    for line in lines {
        let f: Vec<&str> = line.split(',').collect();
        let n: f64 = f[0].parse().unwrap();
        let direct = two_prior_assurance(0.3, 1.5, n, 4.0, PriorSize::Finite(25.0), 0.05).unwrap();
        assert_eq!(f[1].parse::<f64>().unwrap(), direct, "n = {n}");
        assert_eq!(f[3], "closed-form");
        count += 1;
    }
    assert_eq!(count, 12);
}

#[test]
fn missing_k_names_the_field() {
    let (code, _, err) = run(&["size", "--scenario", "costeff", "--gamma", "0.7"]);
    assert_eq!(code, EXIT_INVALID);
    assert!(err.contains("`K`"), "{err}");
}

#[test]
fn malformed_config_reports_location() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    fs::write(&cfg, "{\n  \"scenario\": \"costeff\",\n  \"K\": 7000,\n  \"gama\": 0.7\n}\n").unwrap();
    let (code, _, err) = run(&["size", "--config", p(&cfg)]);
    assert_eq!(code, EXIT_INVALID);
    assert!(err.contains("gama") && err.contains("line 4"), "{err}");
}

#[test]
fn flags_override_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("s.json");
    fs::write(&cfg, r#"{"scenario": "scalar", "delta": 0.1, "n": 50}"#).unwrap();
    let (code, out, _) = run(&["power", "--config", p(&cfg), "--delta", "0.4"]);
    assert_eq!(code, EXIT_OK);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["config"]["delta"], 0.4);
    assert_eq!(v["n"], 50);
}

fn mc_size(dir: &Path, extra: &[&str]) -> (String, String) {
    let curve = dir.join("curve.csv");
    let mut args = vec![
        "size", "--scenario", "scalar", "--engine", "mc-known-var", "--delta", "0.4", "--n-a", "2",
        "--n-d", "30", "--gamma", "0.5", "--grid", "5:80:15", "--replicates", "2000", "--omit-timing",
        "--curve-file", p(&curve),
    ];
    args.extend_from_slice(extra);
    let (code, out, err) = run(&args);
    assert!(code == EXIT_OK || code == EXIT_NOT_ACHIEVED, "{err}");
    (fs::read_to_string(&curve).unwrap(), out)
}

#[test]
fn outputs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let a = mc_size(dir.path(), &["--seed", "5", "--workers", "1"]);
    let b = mc_size(dir.path(), &["--seed", "5", "--workers", "1"]);
    let c = mc_size(dir.path(), &["--seed", "5", "--workers", "3"]);
    assert_eq!(a, b);
    assert_eq!(a, c);
    let d = mc_size(dir.path(), &["--seed", "6"]);
    assert_ne!(a.0, d.0);
}

#[test]
fn sampled_seed_is_printed_and_reproducible() {
    let (code, out, err) = run(&[
        "curve", "--scenario", "two-prop", "--alpha1", "2", "--beta1", "3", "--alpha2", "3", "--beta2", "2",
        "--grid", "20,40", "--replicates", "500",
    ]);
    assert_eq!(code, EXIT_OK);
    let seed = err.trim().strip_prefix("seed: ").expect("seed line").to_string();
    let (_, again, err2) = run(&[
        "curve", "--scenario", "two-prop", "--alpha1", "2", "--beta1", "3", "--alpha2", "3", "--beta2", "2",
        "--grid", "20,40", "--replicates", "500", "--seed", &seed,
    ]);
    assert!(err2.is_empty());
    assert_eq!(out, again);
}

#[test]
fn echoed_config_reloads() {
    let dir = tempfile::tempdir().unwrap();
    let curve = dir.path().join("c.csv");
    let (_, out, _) = run(&[
        "size", "--scenario", "precision", "--d", "0.5", "--sigma2", "4", "--n-d", "inf", "--gamma", "0.9",
        "--grid", "40:80:10", "--replicates", "300", "--seed", "3", "--omit-timing", "--curve-file", p(&curve),
    ]);
    let v: Value = serde_json::from_str(&out).unwrap();
    let echo = dir.path().join("echo.json");
    fs::write(&echo, serde_json::to_string_pretty(&v["config"]).unwrap()).unwrap();
    let (code, again, _) = run(&["size", "--config", p(&echo), "--omit-timing"]);
    assert_eq!(code, EXIT_OK);
    let w: Value = serde_json::from_str(&again).unwrap();
    assert_eq!(w["config"], v["config"]);
    assert_eq!(w["config_hash"], v["config_hash"]);
    assert_eq!(w["n_star"], 62);
}

#[test]
fn reproduce_tables_report() {
    let (code, out, _) = run(&["reproduce-tables", "--seed", "11"]);
    assert_eq!(code, EXIT_OK);
    let lines: Vec<&str> = out.lines().collect();
    assert!(lines[0].contains("published") && lines[0].contains("reproduced") && lines[0].contains("3.5*se"));
    assert_eq!(lines.len(), 1 + 12 + 28 + 1);
    assert!(lines.last().unwrap().contains("rows exceed"));
}

#[test]
fn binary_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_ssd");
    let ok = Command::new(bin).arg("--help").output().unwrap();
    assert_eq!(ok.status.code(), Some(EXIT_OK));
    let bad = Command::new(bin).args(["size", "--scenario", "costeff"]).output().unwrap();
    assert_eq!(bad.status.code(), Some(EXIT_INVALID));
    let miss = Command::new(bin)
        .args(["size", "--scenario", "scalar", "--delta", "0.1", "--gamma", "0.99", "--grid", "1:5:1", "--seed", "1"])
        .current_dir(tempfile::tempdir().unwrap().path())
        .output()
        .unwrap();
    assert_eq!(miss.status.code(), Some(EXIT_NOT_ACHIEVED));
}
