use std::fs;
use std::process::{Command, Output};

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_adam-divergence"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn run_prints_summary_and_exits_zero() {
    let out = bin(&["run", "--alpha", "0.5", "--steps", "20"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(
        stdout(&out).trim(),
        "final_x=10 min_abs_g=1 verdict=Diverges"
    );
}

#[test]
fn run_writes_identical_files_on_repeat() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for path in [&a, &b] {
        let out = bin(&[
            "run",
            "--alpha",
            "0.1",
            "--steps",
            "500",
            "--out",
            path.to_str().unwrap(),
        ]);
        assert_eq!(out.status.code(), Some(0));
    }
    let first = fs::read(&a).unwrap();
    assert_eq!(first, fs::read(&b).unwrap());
    let text = String::from_utf8(first).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("k,x,f,g,m,v"));
    assert_eq!(lines.count(), 501);
}

#[test]
fn run_json_output_parses() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.json");
    let out = bin(&[
        "run",
        "--steps",
        "10",
        "--format",
        "json",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let traj = adam_divergence::harness::import_trajectory_json(&path).unwrap();
    assert_eq!(traj.records().len(), 11);
    assert_eq!(traj.last().x, 10.0);
}

#[test]
fn invalid_parameters_are_usage_errors() {
    for args in [
        &["run", "--alpha=-1"][..],
        &["run", "--beta1", "1"],
        &["run", "--steps", "0"],
        &["run", "--bogus"],
        &["sweep", "--alpha", "1:0:3"],
    ] {
        let out = bin(args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(!out.stderr.is_empty(), "{args:?}");
    }
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, r#"{"alpha": 2.0, "steps": 5}"#).unwrap();
    let out = bin(&["run", "--config", cfg.to_str().unwrap()]);
    assert_eq!(
        stdout(&out).trim(),
        "final_x=10 min_abs_g=1 verdict=Diverges"
    );
    let out = bin(&["run", "--config", cfg.to_str().unwrap(), "--steps", "7"]);
    assert_eq!(
        stdout(&out).trim(),
        "final_x=14 min_abs_g=1 verdict=Diverges"
    );

    fs::write(&cfg, r#"{"alpha": 2.0, "nonsense": 1}"#).unwrap();
    let out = bin(&["run", "--config", cfg.to_str().unwrap()]);
    assert_ne!(out.status.code(), Some(0));
}

#[test]
fn single_cell_sweep_writes_one_row() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.csv");
    let out = bin(&[
        "sweep",
        "--beta1",
        "0.9",
        "--beta2",
        "0.9",
        "--alpha",
        "1",
        "--steps",
        "100",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out).trim(), "1/1 diverge (0 non-diverging)");
    let text = fs::read_to_string(&path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "beta1,beta2,alpha,final_x,min_abs_g,verdict");
    assert_eq!(lines.len(), 2);
    assert!(lines[1].ends_with(",Diverges"), "{}", lines[1]);
}

#[test]
fn sweep_exits_three_when_a_cell_does_not_diverge() {
    let out = bin(&[
        "sweep",
        "--beta1",
        "0.9",
        "--beta2",
        "0.9",
        "--alpha",
        "1",
        "--steps",
        "100",
        "--variant",
        "eps-outside",
        "--epsilon",
        "1000",
    ]);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(stdout(&out).trim(), "0/1 diverge (1 non-diverging)");
}

#[test]
fn verify_passes_and_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.json");
    let out = bin(&[
        "verify",
        "--alpha",
        "1",
        "--steps",
        "1000",
        "--seed",
        "5",
        "--report-out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    let text = stdout(&out);
    assert_eq!(text.lines().filter(|l| l.starts_with("PASS ")).count(), 8);
    let json: serde_json::Value = serde_json::from_slice(&fs::read(&path).unwrap()).unwrap();
    assert_eq!(json["lipschitz_bound"], "6.0000000000000000e0");
    assert!(json["checks"]
        .as_array()
        .unwrap()
        .iter()
        .all(|c| c["passed"] == true));
}

#[test]
fn verify_flags_corrupted_trajectory() {
    let out = bin(&[
        "verify",
        "--alpha",
        "0.5",
        "--steps",
        "200",
        "--corrupt-step",
        "17",
    ]);
    assert_eq!(out.status.code(), Some(1));
    let text = stdout(&out);
    assert!(text.contains("FAIL constant_moments"), "{text}");
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("failed checks:"), "{err}");
}

#[test]
fn plot_data_is_deterministic_and_hits_endpoints() {
    let a = bin(&["plot-data", "--alpha", "1", "--samples", "23"]);
    let b = bin(&["plot-data", "--alpha", "1", "--samples", "23"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let text = stdout(&a);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "t,f,df");
    assert_eq!(lines.len(), 24);
    let first: Vec<f64> = lines[1].split(',').map(|v| v.parse().unwrap()).collect();
    let last: Vec<f64> = lines[23].split(',').map(|v| v.parse().unwrap()).collect();
    assert_eq!(first, vec![-1.0, 1.0, -1.0]);
    assert_eq!(last[0], 10.0);
}
