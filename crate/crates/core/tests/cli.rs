use std::path::Path;
use std::process::Command;

use d2dgraph::harness::{load_metrics, MetricsFormat, CSV_HEADER};

fn cli(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_d2dgraph")).args(args).output().unwrap()
}

fn quick(extra: &[&str]) -> Vec<String> {
    let mut args: Vec<String> = ["--set", "rl.episodes=200", "--set", "fl.total_steps=40", "--set", "scenario.samples_per_device=100"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    args.extend(extra.iter().map(|s| s.to_string()));
    args
}

fn run(sub: &str, out: &Path, extra: &[&str]) -> std::process::Output {
    let out = out.to_str().unwrap();
    let mut args = vec![sub.to_string(), "--out".into(), out.into()];
    args.extend(quick(extra));
    let refs: Vec<&str> = args.iter().map(String::as_str).collect();
    cli(&refs)
}

#[test]
fn run_writes_parseable_csv_and_jsonl() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("m.csv");
    let jsonl = dir.path().join("m.jsonl");
    assert!(run("run", &csv, &[]).status.success());
    assert!(run("run", &jsonl, &["--format", "jsonl"]).status.success());
    let text = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().next().unwrap(), CSV_HEADER.join(","));
    let a = load_metrics(&csv, MetricsFormat::Csv).unwrap();
    let b = load_metrics(&jsonl, MetricsFormat::Jsonl).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.iter().filter(|r| r.phase == "rl").count(), 200);
    assert_eq!(a.iter().filter(|r| r.phase == "fl").count(), 2);
}

#[test]
fn repeated_invocations_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    for (sub, extra) in [
        ("run", vec!["--seed", "4"]),
        ("train", vec!["--seed", "4"]),
        ("sweep", vec!["--key", "fl.tau_a", "--values", "5,10,20"]),
    ] {
        let a = dir.path().join(format!("{sub}-a.csv"));
        let b = dir.path().join(format!("{sub}-b.csv"));
        assert!(run(sub, &a, &extra).status.success(), "{sub}");
        assert!(run(sub, &b, &extra).status.success(), "{sub}");
        assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap(), "{sub}");
    }
}

#[test]
fn sweep_labels_runs_by_value() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s.csv");
    assert!(run("sweep", &out, &["--key", "fl.straggler_fraction", "--values", "0,0.3"]).status.success());
    let recs = load_metrics(&out, MetricsFormat::Csv).unwrap();
    let fl: Vec<_> = recs.iter().filter(|r| r.phase == "fl").collect();
    assert!(fl.iter().any(|r| r.run_id == "fl.straggler_fraction=0" && r.stragglers == 0));
    assert!(fl.iter().any(|r| r.run_id == "fl.straggler_fraction=0.3" && r.stragglers == 3));
}

#[test]
fn config_file_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("c.toml");
    std::fs::write(&config, "[experiment]\nbaseline = \"none\"\n[fl]\ntotal_steps = 40\n").unwrap();
    let summary = dir.path().join("summary.json");
    let out = cli(&[
        "run",
        "--config",
        config.to_str().unwrap(),
        "--out",
        dir.path().join("m.csv").to_str().unwrap(),
        "--summary",
        summary.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let s: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(summary).unwrap()).unwrap();
    assert_eq!(s[0]["baseline"], "none");
    assert_eq!(s[0]["exchange_energy_j"], 0.0);
}

#[test]
fn config_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "[network]\nalpha_d = 1.5\n").unwrap();
    let out = cli(&["run", "--config", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("alpha_d"));

    let out = cli(&["run", "--set", "fl.no_such_key=3"]);
    assert_eq!(out.status.code(), Some(1));
    let out = cli(&["run", "--config", dir.path().join("missing.toml").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn runtime_errors_exit_with_two_and_name_the_stage() {
    let out = cli(&["run", "--set", "scenario.classes_per_device=9"]);
    assert_eq!(out.status.code(), Some(1), "range checks are config errors");

    let dir = tempfile::tempdir().unwrap();
    let out = cli(&["run", "--set", "fl.total_steps=10", "--set", "fl.tau_a=5", "--set", "rl.episodes=10", "--out", dir.path().join("no/such/dir.csv").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("no/such/dir.csv"));
}
