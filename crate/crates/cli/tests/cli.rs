use std::fs;
use std::process::{Command, Output};

use reso_core::metrics::compute_metrics;
use reso_core::presets::preset;
use reso_core::trace::Trace;

fn reso(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_reso")).args(args).output().expect("spawn reso")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

// Two seconds leaves the one-second metric window after the onset at t = 1.
const SHORT: &str = "horizon=2.0";

#[test]
fn run_writes_trace_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = reso(&["run", "--preset", "e2a", "--controller", "adrc-reso", "--set", "horizon=3.0", "--out", out]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let summary = fs::read_to_string(dir.path().join("summary.csv")).unwrap();
    assert_eq!(summary, stdout(&o));
    assert!(summary.lines().nth(1).unwrap().starts_with("e2a-adrc-reso,"));

    let text = fs::read_to_string(dir.path().join("e2a-adrc-reso.csv")).unwrap();
    assert!(text.starts_with("t,i,v,i_a,omega,"));
    let tr = Trace::read_csv(text.as_bytes()).unwrap();
    let sc = preset("e2a").unwrap();
    assert!((tr.horizon() - 3.0).abs() < 1e-9);
    let m = compute_metrics(&tr, sc.onset(), &sc.metrics).unwrap();
    assert!(m.recovery_time.is_some());
    assert!(m.steady_state_error < 0.005 * 100.0);
}

#[test]
fn full_digits_round_trip_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = reso(&[
        "run",
        "--preset",
        "e1",
        "--set",
        "horizon=1.0",
        "--set",
        "metrics.window=0.5",
        "--digits",
        "17",
        "--out",
        out,
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(dir.path().join("e1.csv")).unwrap();
    let tr = Trace::read_csv(text.as_bytes()).unwrap();
    assert_eq!(tr.to_csv_string(17), text);
    let o = reso(&["run", "--preset", "e1", "--digits", "18"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn summary_is_deterministic() {
    let args = ["run", "--preset", "e2b", "--controller", "pi", "--controller", "adrc-gpio", "--set", SHORT];
    let a = reso(&args);
    let b = reso(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(stdout(&a).lines().count(), 3);
}

#[test]
fn divergence_exits_nonzero() {
    let o = reso(&["run", "--preset", "e2a", "--set", "step_size=5e-4", "--set", SHORT]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("error: simulation diverged"));
}

#[test]
fn bad_override_is_a_usage_error() {
    let o = reso(&["run", "--preset", "e2a", "--set", "controller.no_such_key=1"]);
    assert_eq!(o.status.code(), Some(2));
    let o = reso(&["run", "--preset", "e9"]);
    assert_eq!(o.status.code(), Some(2));
    let o = reso(&["run"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn config_file_with_comments() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.toml");
    let text = reso_core::config::to_toml(&preset("e2a").unwrap()).unwrap();
    fs::write(&path, format!("# load step\n{text}")).unwrap();
    let o = reso(&["run", "--config", path.to_str().unwrap(), "--set", SHORT, "--controller", "adrc-gpio"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("e2a,"));
}

#[test]
fn sweep_keeps_value_order() {
    let o = reso(&["sweep", "--preset", "e3", "--set", SHORT, "--values", "20,18.849556,15"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows: Vec<String> = stdout(&o).lines().skip(1).map(String::from).collect();
    assert_eq!(rows.len(), 3);
    assert!(rows[0].starts_with("e3-00-controller.omega_r_hat=20,"));
    assert!(rows[2].starts_with("e3-02-controller.omega_r_hat=15,"));
}

#[test]
fn sweep_without_key_fails() {
    let o = reso(&["sweep", "--preset", "e2a"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn tune_reports_pole_placement() {
    let o = reso(&["tune"]);
    assert!(o.status.success());
    let s = stdout(&o);
    assert!(s.contains("k0,"));
    assert!(s.contains("l7,"));
    assert!(s.contains("pole placement: ok"));

    let o = reso(&["tune", "--form", "without-k0", "--omega-c", "1", "--omega-o", "1", "--omega-r-hat", "0"]);
    assert_eq!(o.status.code(), Some(1));

    let o = reso(&["tune", "--preset", "e2b"]);
    assert!(stdout(&o).contains("omega_o = 1.200000e4"));
    let o = reso(&["tune", "--preset", "e2a", "--controller", "pi"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn analyze_prints_decomposition() {
    let o = reso(&["analyze", "--preset", "e1"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let s = stdout(&o);
    assert!(s.contains("rank(Q_C) = 4"));
    assert!(s.contains("A_q:"));
    assert!(s.contains("note: H_q(3,4)"));

    let o = reso(&["analyze", "--form", "without-k0", "--omega-c", "1", "--omega-o", "1", "--omega-r-hat", "0"]);
    assert_eq!(o.status.code(), Some(1));
}
