use std::path::Path;
use std::process::{Command, Output};

use mmhom::emit::{read_csv, read_json};
use mmhom::fieldio::read_field;
use mmhom::{ExperimentRow, ProbeRow};

fn mmhom(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mmhom")).args(args).output().unwrap()
}

fn write_config(dir: &Path, json: &str) -> String {
    let p = dir.join("c.json");
    std::fs::write(&p, json).unwrap();
    p.to_str().unwrap().to_owned()
}

const SMALL: &str = r#"{
  "potential": {"modulation": {"kind": "constant", "value": 1.0}},
  "schedule": {"n_max": 1}
}"#;

#[test]
fn schedule_writes_a_readable_table() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out = dir.path().join("rows.csv");
    let o = mmhom(&["--config", &cfg, "--out", out.to_str().unwrap(), "schedule"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows: Vec<ExperimentRow> = read_csv(&out).unwrap();
    assert_eq!(rows.len(), 2);
    assert!(rows.iter().all(|r| r.succeeded() && r.discrepancy == 0.0));

    let json = dir.path().join("rows.json");
    let o = mmhom(&["--config", &cfg, "--format", "json", "--out", json.to_str().unwrap(), "schedule"]);
    assert!(o.status.success());
    assert_eq!(read_json::<ExperimentRow>(&json).unwrap(), rows);
}

#[test]
fn regime_violations_exit_with_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"schedule": {"alpha": 0.8, "n_max": 1}}"#);
    let o = mmhom(&["--config", &cfg, "schedule"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("alpha"));
}

#[test]
fn failed_rows_give_a_nonzero_exit() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"schedule": {"n_max": 0}, "solver": {"max_steps": 0}}"#);
    let o = mmhom(&["--config", &cfg, "schedule"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn probe_runs_outside_the_regime() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"schedule": {"n_max": 1}}"#);
    let out = dir.path().join("probe.csv");
    let o = mmhom(&["--config", &cfg, "--out", out.to_str().unwrap(), "probe", "--alpha", "0.5", "0.9"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows: Vec<ProbeRow> = read_csv(&out).unwrap();
    assert_eq!(rows.len(), 4);
    // at α = 0.9 the ratio ε/δ^{3/2} grows
    assert!(rows[3].eps_over_delta_three_halves > rows[2].eps_over_delta_three_halves);
}

#[test]
fn kh_reports_the_quartic_constant() {
    let o = mmhom(&["kh"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let want = 1.5f64.sqrt() * 8.0 / 3.0;
    assert!((v["kh"].as_f64().unwrap() - want).abs() < 1e-3);
    assert!((v["oracle"].as_f64().unwrap() - want).abs() < 1e-2);
}

#[test]
fn minimize_writes_its_field() {
    let dir = tempfile::tempdir().unwrap();
    let field = dir.path().join("u.field");
    let o = mmhom(&["minimize", "--eps", "0.125", "--delta", "0.25", "--field", field.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let u = read_field(&field).unwrap();
    assert_eq!(u.counts(), &[33, 33]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(v["converged"].as_bool().unwrap());
}

#[test]
fn validate_and_config_succeed_on_defaults() {
    assert!(mmhom(&["validate"]).status.success());
    let o = mmhom(&["config"]);
    assert!(o.status.success());
    let c = mmhom::Config::from_json(&String::from_utf8(o.stdout).unwrap()).unwrap();
    assert_eq!(c, mmhom::Config::default());
}

#[test]
fn shipped_configs_parse() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    for entry in std::fs::read_dir(root).unwrap() {
        let path = entry.unwrap().path();
        mmhom::Config::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    }
}
