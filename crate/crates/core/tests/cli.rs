use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn su_steer(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_su-steer"))
        .args(args)
        .env_remove("SU_STEER_SEED")
        .output()
        .expect("binary runs")
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn compute_delta_for_su4() {
    let out = su_steer(&["compute-delta", "--n", "4"]);
    assert_eq!(out.status.code(), Some(0));
    let v = stdout_json(&out);
    assert_eq!(v["values"].to_string(), "[-4,0,4]");
    assert_eq!(v["delta"].to_string(), "0");
}

#[test]
fn invalid_dimension_and_usage_errors() {
    let out = su_steer(&["compute-delta", "--n", "1"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("n ≥ 2 required"));

    assert_eq!(su_steer(&["compute-delta"]).status.code(), Some(2));
    assert_eq!(su_steer(&["no-such-command"]).status.code(), Some(2));
}

#[test]
fn regularity_exit_codes() {
    let out = su_steer(&["check-regularity", "--preset", "cnot"]);
    assert_eq!(out.status.code(), Some(0));
    let v = stdout_json(&out);
    assert_eq!(v["rank"], 15);
    assert_eq!(v["j_max"], 6);

    let zero = su_steer(&["check-regularity", "--fourier", "zero"]);
    assert_eq!(zero.status.code(), Some(1));
    assert_eq!(stdout_json(&zero)["rank"], 6);
}

#[test]
fn random_fourier_reports_its_seed() {
    let out = su_steer(&[
        "check-regularity",
        "--fourier",
        "random",
        "--seed",
        "11",
        "--n-f",
        "3",
    ]);
    let v = stdout_json(&out);
    assert_eq!(v["seed"], 11);

    let env = Command::new(env!("CARGO_BIN_EXE_su-steer"))
        .args([
            "check-regularity",
            "--fourier",
            "random",
            "--seed",
            "11",
            "--n-f",
            "3",
        ])
        .env("SU_STEER_SEED", "23")
        .output()
        .unwrap();
    let w = stdout_json(&env);
    assert_eq!(w["seed"], 23);
    assert_ne!(v["fourier"], w["fourier"]);
}

#[test]
fn plot_needs_a_run_directory() {
    let dir = tempfile::tempdir().unwrap();
    let out = su_steer(&["plot", "--run-dir", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

fn write_goal(path: &Path) {
    // diag(i, i, -i, -i): V = 0 sits exactly on the critical level
    let goal = serde_json::json!({
        "n": 4,
        "re": [[0.0, 0.0, 0.0, 0.0], [0.0, 0.0, 0.0, 0.0], [0.0, 0.0, 0.0, 0.0], [0.0, 0.0, 0.0, 0.0]],
        "im": [[1.0, 0.0, 0.0, 0.0], [0.0, 1.0, 0.0, 0.0], [0.0, 0.0, -1.0, 0.0], [0.0, 0.0, 0.0, -1.0]],
    });
    std::fs::write(path, goal.to_string()).unwrap();
}

#[test]
fn plan_on_the_critical_level_segments_and_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let goal = dir.path().join("goal.json");
    write_goal(&goal);
    let out_dir = dir.path().join("run");
    let out = su_steer(&[
        "plan",
        "--goal",
        goal.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
        "--horizon",
        "60",
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let v = stdout_json(&out);
    assert_eq!(v["branch"], "algorithm1");
    for name in [
        "run.csv",
        "states.csv",
        "plan.json",
        "meta.json",
        "error.svg",
        "controls.svg",
    ] {
        assert!(out_dir.join(name).is_file(), "{name} missing");
    }
    let plan: Value =
        serde_json::from_slice(&std::fs::read(out_dir.join("plan.json")).unwrap()).unwrap();
    assert!(plan["path"]["N"].as_u64().unwrap() >= 2);

    std::fs::remove_file(out_dir.join("error.svg")).unwrap();
    let replot = su_steer(&["plot", "--run-dir", out_dir.to_str().unwrap()]);
    assert_eq!(replot.status.code(), Some(0));
    assert!(out_dir.join("error.svg").is_file());
}

#[test]
fn simulate_refuses_goals_outside_the_basin() {
    let dir = tempfile::tempdir().unwrap();
    let out = su_steer(&[
        "simulate",
        "--preset",
        "minus_identity",
        "--horizon",
        "1",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn spin_model_subcommands() {
    let out = su_steer(&["spin-model", "verify-conjugation"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout_json(&out)["passed"], true);

    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("rwa.csv");
    let out = su_steer(&[
        "spin-model",
        "compare-rwa",
        "--amplitude-scale",
        "0.01",
        "--horizon",
        "2",
        "--out",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("t,err\n"));
    assert!(stdout_json(&out)["max_error"].as_f64().unwrap().is_finite());
}

#[test]
fn config_files_reject_unknown_fields() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"n": 4, "horizon": 5.0, "bogus": 1}"#).unwrap();
    let out = su_steer(&["check-regularity", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}
