use std::path::Path;
use std::process::{Command, Output};

use tomoframe::exchange::{read_json, ReportFile, SolutionFile, StateFile};
use tomoframe::ExperimentConfig;
use tomoframe::config::FrameSpec;
use tomoframe_core::linalg::frobenius_norm;

fn tomoframe(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tomoframe")).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = tomoframe(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn scenario_list_names_all_figures() {
    let text = ok(&["scenario", "list"]);
    for name in ["fig1", "fig2", "fig3", "fig4"] {
        assert!(text.lines().any(|l| l.starts_with(name)), "{name} missing from\n{text}");
    }
}

#[test]
fn scenario_show_is_valid_config_json() {
    let text = ok(&["scenario", "show", "fig1"]);
    let configs: Vec<(String, ExperimentConfig)> = serde_json::from_str(&text).unwrap();
    assert_eq!(configs.len(), 1);
    assert_eq!(configs[0].1.frame, FrameSpec::Pauli { qubits: 4 });
}

#[test]
fn small_scenario_run_writes_csv() {
    let text = ok(&["--threads", "1", "scenario", "run", "fig1", "--trials", "2", "--m-grid", "200,240", "--seed", "3"]);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[0].starts_with("m,trials,recovered,certified"));
    assert!(lines[1].starts_with("200,2,2,"));
}

#[test]
fn frame_listing_and_info() {
    let names = ok(&["frame", "list"]);
    assert!(names.lines().any(|l| l == "pauli"));
    let info = ok(&["frame", "info", "pauli", "--spec", r#"{"kind":"pauli","qubits":2}"#]);
    assert!(info.contains("resolution_defect"), "{info}");
    let defect: f64 = info.lines().find_map(|l| l.strip_prefix("resolution_defect: ")).unwrap().parse().unwrap();
    assert!(defect < 1e-12);
}

#[test]
fn simulate_reconstruct_certify_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let meas = dir.path().join("meas.json");
    let truth = dir.path().join("truth.json");
    let sol = dir.path().join("sol.json");
    let report = dir.path().join("report.json");
    let spec = r#"{"kind":"pauli","qubits":2}"#;
    ok(&["simulate", "--frame-spec", spec, "--m", "40", "--rank", "1", "--seed", "5", "--out", path(&meas), "--truth", path(&truth)]);
    ok(&["reconstruct", "--input", path(&meas), "--out", path(&sol)]);
    ok(&["certify", "--input", path(&sol), "--out", path(&report)]);

    let rho = read_json::<StateFile>(&truth).unwrap().matrix().unwrap();
    let solution: SolutionFile = read_json(&sol).unwrap();
    assert!(solution.converged);
    let sigma = solution.result().unwrap().sigma_star;
    assert!(frobenius_norm(&(sigma - rho)) < 1e-5);
    let r: ReportFile = read_json(&report).unwrap();
    assert!(r.certified && r.trace_norm_is_one, "{r:?}");
    assert_eq!(r.q, Some(1));
}

#[test]
fn noisy_certification_reports_a_bound() {
    let dir = tempfile::tempdir().unwrap();
    let meas = dir.path().join("meas.json");
    let sol = dir.path().join("sol.json");
    ok(&["simulate", "--frame-spec", r#"{"kind":"pauli","qubits":2}"#, "--m", "60", "--seed", "2", "--noise-std", "1e-4", "--out", path(&meas)]);
    ok(&["reconstruct", "--input", path(&meas), "--solver", "lasso", "--param", "1e-4", "--out", path(&sol)]);
    let text = ok(&["certify", "--input", path(&sol), "--variant", "noisy", "--delta", "1e-3"]);
    let r: ReportFile = serde_json::from_str(&text).unwrap();
    assert!(r.certified == r.robustness_bound.is_some());
}

#[test]
fn run_accepts_a_json_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.json");
    let out = dir.path().join("exp.csv");
    let mut c = ExperimentConfig::new(FrameSpec::Pauli { qubits: 1 }, 1, vec![2, 4]);
    c.trials = 3;
    std::fs::write(&cfg, serde_json::to_string(&c).unwrap()).unwrap();
    ok(&["run", "--config", path(&cfg), "--out", path(&out)]);
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().count(), 3);
    let json = ok(&["run", "--config", path(&cfg), "--format", "json"]);
    let records: Vec<serde_json::Value> = serde_json::from_str(&json).unwrap();
    assert_eq!(records[0]["label"], "exp");
}

#[test]
fn errors_exit_nonzero_with_a_message() {
    let cases: [&[&str]; 4] = [
        &["scenario", "run", "fig9"],
        &["frame", "info", "nonsense"],
        &["reconstruct", "--input", "/nonexistent/meas.json"],
        &["simulate", "--frame-spec", r#"{"kind":"pauli","qubits":2}"#, "--m", "4", "--rank", "9", "--out", "/tmp/unused.json"],
    ];
    for args in cases {
        let out = tomoframe(args);
        assert!(!out.status.success(), "{args:?} succeeded");
        let err = String::from_utf8_lossy(&out.stderr);
        assert!(err.starts_with("error: "), "{args:?}: {err}");
    }
}

#[test]
fn invalid_json_config_is_reported_with_its_path() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    std::fs::write(&cfg, r#"{"frame":{"kind":"pauli","qubits":2}}"#).unwrap();
    let out = tomoframe(&["run", "--config", path(&cfg)]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("bad.json"));
}
