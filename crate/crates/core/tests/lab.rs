use std::path::{Path, PathBuf};
use std::process::Command;

use qcmod::lab::{report_value, to_csv, to_json, EstimateReport, ExperimentConfig, ExperimentId, Lab, Verdict};

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn qcmod() -> Command {
    Command::new(env!("CARGO_BIN_EXE_qcmod"))
}

fn e2_report() -> EstimateReport {
    let cfg = ExperimentConfig::load(&configs().join("e2.toml")).unwrap();
    Lab::new(cfg).unwrap().run().unwrap()
}

#[test]
fn json_round_trips_at_written_precision() {
    let report = e2_report();
    let text = to_json(&report).unwrap();
    let parsed: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(parsed, report_value(&report).unwrap());
    let back: EstimateReport = serde_json::from_str(&text).unwrap();
    assert_eq!(to_json(&back).unwrap(), text);
}

#[test]
fn e2_report_matches_golden() {
    let golden = include_str!("golden/e2.json");
    assert_eq!(to_json(&e2_report()).unwrap(), golden);
}

#[test]
fn empty_report_has_header_only_csv() {
    let mut cfg = ExperimentConfig::from_toml_str("").unwrap();
    cfg.experiments = vec![ExperimentId::E2];
    let report = EstimateReport {
        version: "0".into(),
        config: cfg,
        experiments: Vec::new(),
    };
    let csv = to_csv(&report).unwrap();
    assert_eq!(csv.lines().count(), 1);
    assert!(csv.starts_with("experiment,case,p,convention,L,L_prime,m,value"));
}

#[test]
fn csv_has_one_line_per_row() {
    let report = e2_report();
    let csv = to_csv(&report).unwrap();
    assert_eq!(csv.lines().count(), 1 + report.rows().count());
    assert!(report.rows().all(|r| r.verdict == Verdict::Pass));
}

#[test]
fn validate_accepts_default_config() {
    let out = qcmod().arg("validate").arg(configs().join("default.toml")).output().unwrap();
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("ok:"));
}

#[test]
fn unknown_key_exits_with_config_code() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    std::fs::write(&path, "experiments = [\"E2\"]\nbogus = 1\n").unwrap();
    let out = qcmod().arg("run").arg(&path).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn dimension_cap_exits_with_resource_code() {
    let out = qcmod()
        .args(["run", "--max-dim", "100"])
        .arg(configs().join("default.toml"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn run_writes_csv_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("e2.csv");
    let out = qcmod()
        .args(["run", "--format", "csv", "--out"])
        .arg(&path)
        .arg(configs().join("e2.toml"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.lines().skip(1).all(|l| l.ends_with(",pass")));
}
