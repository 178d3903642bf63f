use std::path::Path;
use std::process::{Command, Output};

use pcascape::io::{parse_landscape_csv, CsvTable, ExperimentConfig};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pcascape"))
        .args(args)
        .output()
        .unwrap()
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap()
}

#[test]
fn landscape_outputs_parse_and_manifest_round_trips() {
    let d = tempfile::tempdir().unwrap();
    let out = d.path().to_str().unwrap();
    let o = run(&["landscape", "--geometry", "4x2", "--h", "0.9", "--seed", "5", "--out", out]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = parse_landscape_csv(&read(d.path(), "landscape.csv"), 0.9).unwrap();
    assert_eq!(rows.len(), 256);
    let cfg = ExperimentConfig::parse(&read(d.path(), "manifest.txt")).unwrap();
    assert_eq!(cfg.seed, Some(5));
    assert_eq!(cfg.geometry.to_string(), "4x2");
    let summary: serde_json::Value = serde_json::from_str(&read(d.path(), "landscape.json")).unwrap();
    assert!((summary["gamma_m"].as_f64().unwrap() - 6.6).abs() < 1e-9);
}

#[test]
fn validation_errors_exit_with_code_two() {
    let d = tempfile::tempdir().unwrap();
    let out = d.path().to_str().unwrap();
    for args in [
        vec!["exact", "--h", "1.5", "--seed", "1", "--out", out],
        vec!["exact", "--geometry", "5x2", "--seed", "1", "--out", out],
        vec!["exact", "--beta", "-1", "--seed", "1", "--out", out],
        vec!["landscape", "--geometry", "4x4", "--seed", "1", "--out", out],
        vec!["paths", "--cases", "Z9", "--seed", "1", "--out", out],
        vec!["mc", "--geometry", "12x12", "--beta", "5", "--seed", "1", "--out", out],
    ] {
        let o = run(&args);
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    }
}

#[test]
fn config_file_is_checked() {
    let d = tempfile::tempdir().unwrap();
    let cfg = d.path().join("run.cfg");
    let out = d.path().join("o");
    std::fs::write(&cfg, "command = exact\ngeometry = 4x2\nh = 0.9\nbeta = 1, 2\nseed = 9\n").unwrap();
    let o = run(&["exact", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let t = CsvTable::parse(&read(&out, "exact.csv")).unwrap();
    assert_eq!(t.schema, "exact");
    assert_eq!(t.rows.len(), 2);
    let o = run(&["mc", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    std::fs::write(&cfg, "command = exact\ncolour = blue\n").unwrap();
    let o = run(&["exact", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn omitted_seed_is_generated_and_recorded() {
    let d = tempfile::tempdir().unwrap();
    let o = run(&["landscape", "--geometry", "2x2", "--out", d.path().to_str().unwrap()]);
    assert!(o.status.success());
    let echoed = String::from_utf8_lossy(&o.stderr);
    let seed: u64 = echoed.trim().strip_prefix("seed = ").unwrap().parse().unwrap();
    let cfg = ExperimentConfig::parse(&read(d.path(), "manifest.txt")).unwrap();
    assert_eq!(cfg.seed, Some(seed));
}

#[test]
fn mc_output_is_deterministic_across_thread_counts() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let common = ["mc", "--geometry", "6x6", "--h", "0.9", "--beta", "0.8", "--trials", "30", "--seed", "42"];
    for (dir, threads) in [(&a, "1"), (&b, "2")] {
        let mut args = common.to_vec();
        args.extend(["--threads", threads, "--out", dir.path().to_str().unwrap()]);
        let o = run(&args);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    for f in ["mc_trials.csv", "mc_summary.csv", "visit.csv", "recurrence.csv"] {
        assert_eq!(read(a.path(), f), read(b.path(), f), "{f}");
    }
}

#[test]
fn paths_report_quoted_mismatch_without_failing() {
    let d = tempfile::tempdir().unwrap();
    let o = run(&[
        "paths", "--h", "0.5", "--cases", "A1,E2", "--storyboard", "--seed", "1", "--out",
        d.path().to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let t = CsvTable::parse(&read(d.path(), "paths.csv")).unwrap();
    let col = t.column("matches_quoted").unwrap();
    assert_eq!(t.rows[0][col], "true");
    assert_eq!(t.rows[1][col], "false");
    let trace = read(d.path(), "traces/A1.json");
    assert!(pcascape::paths::PathTrace::from_json(&trace).is_ok());
    assert!(d.path().join("storyboards/E2.txt").exists());
}

#[test]
fn report_combines_sections() {
    let d = tempfile::tempdir().unwrap();
    let o = run(&[
        "report", "--geometry", "4x2", "--h", "0.9", "--beta", "1", "--seed", "1", "--out",
        d.path().to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let md = read(d.path(), "report.md");
    for s in ["## Landscape", "## Reference paths", "## Exact chain", "t_mix(0.25) 439"] {
        assert!(md.contains(s), "{s}");
    }
}
