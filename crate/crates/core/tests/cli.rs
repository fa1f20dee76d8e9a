use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_junction"))
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

#[test]
fn check_y_passes() {
    let cfg = configs().join("y_junction.json");
    let out = run(&["check", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    for v in report["verdicts"].as_array().unwrap() {
        assert!(v["D"].as_f64().unwrap() > 0.0);
        assert_eq!(v["kernel_dim"], 0);
    }
}

#[test]
fn check_equal_slopes_fails() {
    let cfg = configs().join("equal_slopes.json");
    let out = run(&["check", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&out), 1);
    let reason: serde_json::Value = serde_json::from_slice(out.stderr.trim_ascii()).unwrap();
    assert_eq!(reason["status"], "math_failure");
}

#[test]
fn invalid_input_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(&bad, r#"{"version": 1, "junction": {"n": 1, "m": 1, "q": 3, "s": 2, "theta": [1,1,1], "slopes": [[1],[0],[2]], "extra": 0}}"#).unwrap();
    assert_eq!(code(&run(&["check", "--config", bad.to_str().unwrap()])), 2);
    assert_eq!(code(&run(&["combinatorics", "--override", "unknown=1"])), 2);
    assert_eq!(code(&run(&["simulate"])), 2);
    assert_eq!(code(&run(&["check", "--config", "/nonexistent.json"])), 2);
    let side = configs().join("y_junction.json");
    assert_eq!(code(&run(&["check", "--config", side.to_str().unwrap(), "--override", "junction.s=3"])), 2);
}

#[test]
fn combinatorics_small_ranges_and_determinism() {
    let a = run(&["combinatorics", "--b-max", "2", "--degree-max", "16", "--override", "scan.n_max=12", "--seed", "3"]);
    let b = run(&["combinatorics", "--b-max", "2", "--degree-max", "16", "--override", "scan.n_max=12", "--seed", "3"]);
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
    let report: serde_json::Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(report["constants"]["q_pi"], "12337/625");
    assert_eq!(report["scan"]["ranges"]["degree_max"], 16);
}

#[test]
fn simulate_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("perturbed_y.json");
    let out = run(&[
        "simulate",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
        "--override",
        "run.t_end=0.1",
        "--override",
        "run.record_every=10",
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let mut rdr = csv::Reader::from_path(dir.path().join("diagnostics.csv")).unwrap();
    let headers = rdr.headers().unwrap().clone();
    assert_eq!(&headers[0], "t");
    assert_eq!(&headers[7], "P0");
    let rows: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 6);
    let areas: Vec<f64> = rows.iter().map(|r| r[1].parse().unwrap()).collect();
    assert!(areas.windows(2).all(|w| w[1] < w[0]));
    let state = fs::read_to_string(dir.path().join("final_state.csv")).unwrap();
    assert_eq!(state.lines().count(), 1 + 3 * 65);
    let first = fs::read(dir.path().join("report.json")).unwrap();
    let again = tempfile::tempdir().unwrap();
    run(&["simulate", "--config", cfg.to_str().unwrap(), "--out", again.path().to_str().unwrap(), "--override", "run.t_end=0.1", "--override", "run.record_every=10"]);
    assert_eq!(first, fs::read(again.path().join("report.json")).unwrap());
}

#[test]
fn newton_failure_exits_3() {
    let cfg = configs().join("perturbed_y.json");
    let out = run(&[
        "simulate",
        "--config",
        cfg.to_str().unwrap(),
        "--override",
        "solver.newton_max_iters=1",
        "--override",
        "solver.newton_tol=1e-300",
    ]);
    assert_eq!(code(&out), 3);
    let reason: serde_json::Value = serde_json::from_slice(out.stderr.trim_ascii()).unwrap();
    assert_eq!(reason["status"], "numerical_failure");
}
