use std::path::Path;
use std::process::{Command, Output};

use resolab::commands::{execute, Command as Sub};
use resolab::config::RunConfig;
use resolab::output::{read_csv, Cell};
use serde_json::Value;

fn resolab(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_resolab"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("spawn resolab")
}

fn rows(text: &str) -> Vec<Vec<f64>> {
    read_csv(text)
        .unwrap()
        .into_iter()
        .map(|r| r.iter().map(|v| v.parse().unwrap_or(f64::NAN)).collect())
        .collect()
}

#[test]
fn pole_without_coupling_is_the_bare_level() {
    let dir = tempfile::tempdir().unwrap();
    let out = resolab(&["pole", "--set", "model.lambda=0", "--set", "model.omega1=1.7"], dir.path());
    assert!(out.status.success());
    let r = rows(&String::from_utf8(out.stdout).unwrap());
    assert_eq!((r[0][0], r[0][1]), (1.7, 0.0));
}

#[test]
fn survive_is_palindromic_and_writes_a_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let out = resolab(&["survive", "--out", "run/s.csv"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(dir.path().join("run/s.csv")).unwrap();
    assert!(text.starts_with("# resolab survive\n"));
    let r = rows(&text);
    assert_eq!(r.len(), 201);
    for k in 0..r.len() {
        let j = r.len() - 1 - k;
        assert_eq!(r[k][0], -r[j][0]);
        assert!((r[k][7] - r[j][7]).abs() < 1e-10);
    }
    let meta: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("run/s.csv.meta.json")).unwrap()).unwrap();
    assert_eq!(meta["command"], "survive");
    assert_eq!(meta["config"]["model"]["lambda"], 0.1);
}

#[test]
fn sumcheck_reports_a_small_deviation() {
    let dir = tempfile::tempdir().unwrap();
    let out = resolab(&["sumcheck", "--out", "sum.csv"], dir.path());
    assert!(out.status.success());
    let stdout = String::from_utf8(out.stdout).unwrap();
    let line = stdout.lines().find(|l| l.starts_with("max_abs_deviation")).unwrap();
    let v: f64 = line.split('=').nth(1).unwrap().trim().parse().unwrap();
    assert!(v < 1e-6);
}

#[test]
fn csv_round_trips_the_report() {
    let mut cfg = RunConfig::default();
    cfg.experiment.time_points = 21;
    let rep = execute(Sub::Survive, &cfg).unwrap();
    let back = rows(&rep.to_csv(17));
    for (row, orig) in back.iter().zip(&rep.rows) {
        for (v, cell) in row.iter().zip(orig) {
            let Cell::F(x) = cell else { panic!("unexpected cell") };
            assert_eq!(v, x);
        }
    }
}

#[test]
fn json_output_mirrors_the_columns() {
    let dir = tempfile::tempdir().unwrap();
    let out = resolab(&["hardy", "--format", "json"], dir.path());
    assert!(out.status.success());
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["summary"]["verdict"], "H2_plus");
    assert_eq!(v["columns"][0]["name"], "y");
}

#[test]
fn print_config_echoes_overrides() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("c.json"), r#"{"model": {"omega1": 2.0}}"#).unwrap();
    let out = resolab(
        &["pole", "--config", "c.json", "--set", "quadrature.n=500", "--print-config"],
        dir.path(),
    );
    assert!(out.status.success());
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["model"]["omega1"], 2.0);
    assert_eq!(v["quadrature"]["n"], 500);
    assert_eq!(v["model"]["lambda"], 0.1);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad_key = resolab(&["pole", "--set", "model.coupling=1"], dir.path());
    assert_eq!(bad_key.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&bad_key.stderr).contains("model.coupling"));
    assert_eq!(resolab(&["pole", "--set", "model.lambda=2"], dir.path()).status.code(), Some(2));
    assert_eq!(resolab(&["pole", "--config", "missing.json"], dir.path()).status.code(), Some(2));
    assert_eq!(resolab(&["nonsense"], dir.path()).status.code(), Some(2));
    // A coarse sampled function is a resolution failure, not a config error.
    let csv: String = (0..256)
        .map(|k| {
            let e = (k as f64 - 128.0) * 3.0;
            format!("{e},{},{}\n", e / (e * e + 1.0), -1.0 / (e * e + 1.0))
        })
        .collect();
    std::fs::write(dir.path().join("phi.csv"), csv).unwrap();
    let out = resolab(&["hardy", "--set", "experiment.samples_csv=phi.csv"], dir.path());
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn every_subcommand_runs_on_defaults() {
    let cfg = RunConfig::default();
    for sub in [Sub::Pole, Sub::Bw, Sub::Born, Sub::Probe, Sub::Hardy, Sub::Zspace, Sub::Unity] {
        let rep = execute(sub, &cfg).unwrap();
        assert!(!rep.rows.is_empty(), "{}", sub.name());
    }
}
