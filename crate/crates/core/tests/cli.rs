use std::path::PathBuf;
use std::process::{Command, Output};

use modmul::io;

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_modmul")).args(args).output().expect("binary runs")
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("modmul-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn gen_writes_a_parseable_circuit() {
    let path = scratch("mont.txt");
    let out = bin(&["gen", "--design", "montgomery", "--backend", "fourier", "--n", "16", "--seed", "1", "--out", path.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&path).unwrap();
    let c = io::from_text(&text).unwrap();
    assert_eq!(c.meta.design.as_deref(), Some("montgomery"));
    assert_eq!(c.meta.n, Some(16));
    assert_eq!(io::to_text(&c), text);
}

#[test]
fn gen_json_round_trips() {
    let out = bin(&["gen", "--design", "barrett", "--backend", "ripple", "--n", "6", "--format", "json"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let c = io::from_json(&text).unwrap();
    assert_eq!(io::to_json(&c), text);
}

#[test]
fn narrow_widths_are_rejected() {
    let out = bin(&["gen", "--n", "2"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("minimum width"));
}

#[test]
fn verify_exhaustive_division() {
    let out = bin(&["verify", "--design", "division", "--backend", "ripple", "--n", "4", "--mode", "controlled", "--exhaustive"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["pass"], true);
    assert_eq!(v["probes"].as_array().unwrap().len(), 0);
}

#[test]
fn verify_with_probes_reports_a_trace() {
    let out = bin(&["verify", "--design", "montgomery", "--backend", "lookahead", "--n", "5", "--exhaustive", "--probes"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let probes = v["probes"].as_array().unwrap();
    assert!(!probes.is_empty());
    assert!(probes.iter().all(|p| p["expected"] == p["got"]));
}

#[test]
fn verify_rejects_a_corrupted_file() {
    let path = scratch("bad.txt");
    assert!(bin(&["gen", "--design", "division", "--backend", "ripple", "--n", "5", "--out", path.to_str().unwrap()]).status.success());
    let text = std::fs::read_to_string(&path).unwrap();
    std::fs::write(&path, text.replacen("CCX", "CCZ", 1)).unwrap();
    let out = bin(&["verify", "--circuit", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn verify_reports_a_wrong_circuit() {
    let path = scratch("wrong.txt");
    assert!(bin(&["gen", "--design", "division", "--backend", "ripple", "--n", "5", "--out", path.to_str().unwrap()]).status.success());
    let text = std::fs::read_to_string(&path).unwrap();
    // flip one control; the file still parses but computes something else
    let at = text.find("\nCCX ").unwrap() + 5;
    std::fs::write(&path, format!("{}!{}", &text[..at], &text[at..])).unwrap();
    let out = bin(&["verify", "--circuit", path.to_str().unwrap(), "--count", "64"]);
    assert_eq!(out.status.code(), Some(1));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["pass"], false);
    assert!(v["counterexample"]["inputs"]["y"].is_string());
}

#[test]
fn schedule_prints_a_report() {
    let out = bin(&["schedule", "--design", "barrett", "--backend", "lookahead", "--n", "8", "--model", "toffoli"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["model"], "toffoli");
    assert!(v["depth"].as_f64().unwrap() > 0.0);
}

#[test]
fn sweep_is_reproducible() {
    let cfg = scratch("sweep.toml");
    std::fs::write(&cfg, "n = [8, 16]\ndesigns = [\"division\", \"montgomery\"]\nbackends = [\"prefix_ripple\", \"fourier\"]\nsamples = 2\nseed = 4\n").unwrap();
    let (a, b) = (scratch("a.csv"), scratch("b.csv"));
    for p in [&a, &b] {
        let out = bin(&["sweep", "--config", cfg.to_str().unwrap(), "--out", p.to_str().unwrap()]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let (ta, tb) = (std::fs::read_to_string(&a).unwrap(), std::fs::read_to_string(&b).unwrap());
    assert_eq!(ta, tb);
    assert_eq!(ta.lines().count(), 1 + 2 * 2 * 2);
}

#[test]
fn sweep_flags_override_the_config() {
    let out = bin(&["sweep", "--n", "8", "--design", "barrett", "--backend", "ripple", "--model", "toffoli,equal_latency", "--samples", "1", "--format", "json"]);
    assert!(out.status.success());
    let rows: Vec<serde_json::Value> = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(rows.len(), 2);
    assert!(bin(&["sweep", "--n", "3"]).status.code() == Some(1));
    assert!(bin(&["sweep", "--samples", "0"]).status.code() == Some(1));
}
