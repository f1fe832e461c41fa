use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_overlay-sim"))
}

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn ok(out: Output) -> String {
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

#[test]
fn run_writes_csv_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let stdout = ok(bin()
        .args([
            "run",
            "--config",
            "topoA",
            "--policy",
            "oorp",
            "--estimator",
            "priority-probe",
            "--probe-interval",
            "25",
        ])
        .args(["--rho", "0.5", "--horizon", "2000", "--seed", "4", "--out"])
        .arg(dir.path())
        .output()
        .unwrap());
    let json: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(json["policy"], "oorp-priority-probe-T25");
    assert_eq!(json["verdict"]["stable"], true);
    let csv =
        fs::read_to_string(dir.path().join("oorp-priority-probe-T25_rho0.50_seed4.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2001);
}

#[test]
fn run_is_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        ok(bin()
            .args([
                "run",
                "--policy",
                "obp",
                "--rho",
                "0.7",
                "--horizon",
                "3000",
                "--out",
            ])
            .arg(d.path())
            .output()
            .unwrap());
    }
    let name = "obp_rho0.70_seed1.csv";
    assert_eq!(
        fs::read(a.path().join(name)).unwrap(),
        fs::read(b.path().join(name)).unwrap()
    );
}

#[test]
fn sweep_honours_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let stdout = ok(bin()
        .arg("sweep")
        .arg("--config")
        .arg(fixtures().join("experiments/topoA-policies.toml"))
        .args([
            "--horizon",
            "2000",
            "--replications",
            "1",
            "--seed",
            "9",
            "--policy",
            "centralized",
            "--frame-length",
            "50",
        ])
        .args([
            "--slope-threshold",
            "0.02",
            "--backlog-floor",
            "100",
            "--out",
        ])
        .arg(dir.path())
        .output()
        .unwrap());
    assert!(stdout.contains("max stable load centralized-T50"));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("sweep.json")).unwrap()).unwrap();
    assert_eq!(report["horizon"], 2000);
    assert_eq!(report["points"].as_array().unwrap().len(), 11);
    assert_eq!(report["points"][0]["runs"][0]["seed"], 9);
    assert!(dir
        .path()
        .join("centralized-T50_rho0.50_seed9.csv")
        .exists());
}

#[test]
fn oracle_matches_fixture() {
    let dir = tempfile::tempdir().unwrap();
    ok(bin()
        .args(["oracle", "--config", "topoC", "--out"])
        .arg(dir.path())
        .output()
        .unwrap());
    let fresh: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("topoC.oracle.json")).unwrap())
            .unwrap();
    let stored: serde_json::Value = serde_json::from_str(
        &fs::read_to_string(fixtures().join("oracle/topoC.oracle.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(fresh["lambda_max"], stored["lambda_max"]);
    let (a, b) = (
        fresh["utility"].as_f64().unwrap(),
        stored["utility"].as_f64().unwrap(),
    );
    assert!((a - b).abs() < 1e-6);
}

#[test]
fn demo_queue_prints_and_writes() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("q.csv");
    let stdout = ok(bin()
        .args(["demo-queue", "--tau", "40", "--out"])
        .arg(&path)
        .output()
        .unwrap());
    assert!(stdout.contains("t=80 "));
    assert_eq!(fs::read_to_string(&path).unwrap().lines().count(), 122);
}

#[test]
fn rate_control_reports_oracle() {
    let stdout = ok(bin()
        .args([
            "rate-control",
            "--config",
            "topoC",
            "--horizon",
            "20000",
            "--window",
            "1000",
            "--tail",
            "5000",
        ])
        .output()
        .unwrap());
    let json: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(json["report"]["tail_rates"].as_array().unwrap().len(), 3);
    assert_eq!(json["oracle_rates"].as_array().unwrap().len(), 3);
}

#[test]
fn validate_topology_lists_tunnels() {
    let stdout = ok(bin()
        .args(["validate-topology", "--config"])
        .arg(fixtures().join("topoB-sub.toml"))
        .output()
        .unwrap());
    assert!(stdout.contains("18 tunnels"));
    assert_eq!(stdout.lines().filter(|l| l.starts_with("  (")).count(), 18);
}

#[test]
fn bad_input_fails_cleanly() {
    let out = bin()
        .args(["validate-topology", "--config", "no-such-file.toml"])
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("no-such-file.toml"));
    let out = bin()
        .args(["run", "--policy", "nonsense"])
        .output()
        .unwrap();
    assert!(!out.status.success());
    let out = bin()
        .args([
            "run",
            "--estimator",
            "priority-probe",
            "--probe-interval",
            "0",
            "--horizon",
            "10",
        ])
        .output()
        .unwrap();
    assert!(!out.status.success());
}
