use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use jade_core::pipeline::RunReport;
use tempfile::TempDir;

fn jade(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_jade"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("spawn jade")
}

fn assert_ok(o: &Output) {
    assert!(
        o.status.success(),
        "status {:?}\nstdout:\n{}\nstderr:\n{}",
        o.status,
        String::from_utf8_lossy(&o.stdout),
        String::from_utf8_lossy(&o.stderr)
    );
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("scenario.toml");
    fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_owned()
}

#[test]
fn pulse_writes_csv() {
    let dir = TempDir::new().unwrap();
    assert_ok(&jade(&["pulse"], dir.path()));
    let pulse = fs::read_to_string(dir.path().join("pulse.csv")).unwrap();
    assert_eq!(pulse.lines().next(), Some("t,g"));
    assert_eq!(pulse.lines().count(), 129);
    let spec = fs::read_to_string(dir.path().join("spectrum.csv")).unwrap();
    assert_eq!(spec.lines().count(), 129);
}

#[test]
fn run_report_is_reproducible() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    for d in [&a, &b] {
        assert_ok(&jade(&["run", "--snapshots", "40", "--seed", "9"], d.path()));
    }
    let ra = fs::read(a.path().join("report.json")).unwrap();
    let rb = fs::read(b.path().join("report.json")).unwrap();
    assert_eq!(ra, rb);
    let report = RunReport::from_json(std::str::from_utf8(&ra).unwrap()).unwrap();
    assert_eq!(report.seed, 9);
    assert_eq!(report.angles.len(), 2);
    assert!(report.timing_ms.is_none());
}

#[test]
fn simulate_then_estimate_matches_run() {
    let dir = TempDir::new().unwrap();
    let sim = dir.path().join("sim");
    let est = dir.path().join("est");
    let run = dir.path().join("run");
    assert_ok(&jade(&["simulate", "--snapshots", "30", "--seed", "4"], &sim));
    let dataset = sim.join("dataset.jade");
    let config = sim.join("config.toml");
    assert_ok(&jade(
        &[
            "estimate",
            dataset.to_str().unwrap(),
            "--config",
            config.to_str().unwrap(),
        ],
        &est,
    ));
    assert_ok(&jade(&["run", "--snapshots", "30", "--seed", "4"], &run));
    let from_file = fs::read_to_string(est.join("report.json")).unwrap();
    let direct = fs::read_to_string(run.join("report.json")).unwrap();
    assert_eq!(from_file, direct);
}

#[test]
fn dumps_are_written() {
    let dir = TempDir::new().unwrap();
    assert_ok(&jade(
        &[
            "run",
            "--snapshots",
            "20",
            "--dump-correlation",
            "--dump-roots",
            "--dump-fit",
            "--fit-snapshot",
            "3",
            "--timing",
        ],
        dir.path(),
    ));
    let corr = fs::read_to_string(dir.path().join("correlation.csv")).unwrap();
    assert_eq!(corr.lines().count(), 1 + 127);
    let roots = fs::read_to_string(dir.path().join("roots.csv")).unwrap();
    let selected = roots.lines().skip(1).filter(|l| l.ends_with(",1")).count();
    assert_eq!(selected, 2);
    for i in 0..2 {
        let fit = fs::read_to_string(dir.path().join(format!("fit_path{i}.csv"))).unwrap();
        assert!(fit.starts_with("omega,phase_residual,fitted_line"));
    }
    let report = fs::read_to_string(dir.path().join("report.json")).unwrap();
    assert!(RunReport::from_json(&report).unwrap().timing_ms.is_some());
}

#[test]
fn fit_snapshot_out_of_range_is_rejected() {
    let dir = TempDir::new().unwrap();
    let o = jade(&["run", "--snapshots", "5", "--dump-fit", "--fit-snapshot", "5"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn montecarlo_writes_summary() {
    let dir = TempDir::new().unwrap();
    assert_ok(&jade(&["montecarlo", "--trials", "3", "--snapshots", "30"], dir.path()));
    let text = fs::read_to_string(dir.path().join("montecarlo.json")).unwrap();
    let value: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(value["trials"].as_array().unwrap().len(), 3);
    assert_eq!(value["failed"], 0);
}

#[test]
fn bad_config_exits_with_validation_code() {
    let dir = TempDir::new().unwrap();
    for body in [
        "schema = 1\nunknown_key = 3\n",
        "schema = 2\n",
        "schema = 1\nrho = \"wide\"\n",
        "schema = 1\nsensors = 1\n",
        "schema = 1\ntheta_deg = []\ntau = []\n",
    ] {
        let cfg = write_config(dir.path(), body);
        let o = jade(&["run", "--config", &cfg], dir.path());
        assert_eq!(o.status.code(), Some(2), "{body:?}: {}", String::from_utf8_lossy(&o.stderr));
        assert!(!String::from_utf8_lossy(&o.stderr).is_empty());
    }
}

#[test]
fn missing_and_malformed_inputs() {
    let dir = TempDir::new().unwrap();
    let missing = dir.path().join("nope.jade");
    let o = jade(&["estimate", missing.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(1));

    let bad = dir.path().join("bad.jade");
    fs::write(&bad, "JADE1 M=2 N=2 S=1 delta=0.5\n1:0,1:0\n").unwrap();
    let o = jade(&["estimate", bad.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));
}
