use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn freeflyer(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_freeflyer")).args(args).env_remove("FREEFLYER_OUT").output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn scenario(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(format!("{name}.json")).display().to_string()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn availability_prints_six_significant_digits() {
    let o = freeflyer(&["availability", "--mtbf", "9", "--mttr", "0.5", "--mtfs", "0.5"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "0.900000\n");
    let o = freeflyer(&["availability", "--mtbf", "1", "--mttr", "0", "--mtfs", "0"]);
    assert_eq!(stdout(&o), "1.00000\n");
    let o = freeflyer(&["availability", "--mtbf", "0", "--mttr", "0", "--mtfs", "0"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("must be positive"), "{}", stderr(&o));
}

#[test]
fn simulate_writes_log_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = freeflyer(&["simulate", &scenario("esa-dextrous"), "-o", out]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = dir.path().join("esa-dextrous.csv");
    let summary = dir.path().join("esa-dextrous.summary.json");
    assert!(stdout(&o).contains(csv.to_str().unwrap()));
    assert!(stdout(&o).contains(summary.to_str().unwrap()));
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("t,px,py,pz,err,Px,Py,Pz,Lx,Ly,Lz,KE,Nrx,Nry,Nrz,att_err,sat\n"));
    assert_eq!(json(&summary)["steps"], 10000);
}

#[test]
fn identical_invocations_give_identical_csv() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        let o =
            freeflyer(&["simulate", "attitude-maneuver", "--set", "run.duration=1", "-o", d.path().to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    }
    let read = |d: &tempfile::TempDir| std::fs::read(d.path().join("attitude-maneuver.csv")).unwrap();
    assert_eq!(read(&a), read(&b));
}

#[test]
fn malformed_scenario_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    let mut doc: Value = serde_json::from_str(&std::fs::read_to_string(scenario("planar-tracking")).unwrap()).unwrap();
    doc["model"].as_object_mut().unwrap().remove("links");
    std::fs::write(&path, doc.to_string()).unwrap();
    let o = freeflyer(&["simulate", path.to_str().unwrap(), "-o", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("model.links"), "{}", stderr(&o));
    assert!(!dir.path().join("planar-tracking.csv").exists());

    std::fs::write(&path, "{ not json").unwrap();
    let o = freeflyer(&["simulate", path.to_str().unwrap(), "-o", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 1"), "{}", stderr(&o));
}

#[test]
fn dt_override_changes_the_step_count() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = freeflyer(&["simulate", &scenario("planar-tracking"), "--set", "run.dt=0.0005", "-o", out]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let summary = json(&dir.path().join("planar-tracking.summary.json"));
    assert_eq!(summary["steps"], 8000);
    assert_eq!(summary["dt"], 0.0005);
}

#[test]
fn integration_failure_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let o = freeflyer(&[
        "simulate",
        "free-float-torque",
        "--set",
        "initial_state.joint_rates.0=1e200",
        "-o",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("not finite"), "{}", stderr(&o));
}

#[test]
fn unusable_output_dir_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("taken");
    std::fs::write(&file, "").unwrap();
    let o = freeflyer(&["simulate", "planar-tracking", "-o", file.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn output_dir_defaults_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_freeflyer"))
        .args(["simulate", "planar-tracking", "--set", "run.duration=0.2"])
        .env("FREEFLYER_OUT", dir.path())
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(dir.path().join("planar-tracking.csv").exists());
}

#[test]
fn jobs_run_several_scenarios() {
    let dir = tempfile::tempdir().unwrap();
    let o = freeflyer(&[
        "simulate",
        "planar-tracking",
        "planar-cycle",
        "--set",
        "run.duration=0.5",
        "--jobs",
        "2",
        "-o",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(dir.path().join("planar-tracking.summary.json").exists());
    assert!(dir.path().join("planar-cycle.summary.json").exists());
}

#[test]
fn overshoot_experiment() {
    let dir = tempfile::tempdir().unwrap();
    let o = freeflyer(&["experiment", "overshoot", "-o", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let report = json(&dir.path().join("overshoot.report.json"));
    let s = &report["summary"];
    assert!(s["naive_peak"].as_f64().unwrap() > s["generalized_peak"].as_f64().unwrap());
    assert!(s["generalized_final"].as_f64().unwrap() < 3e-4);
    assert!(dir.path().join("free-floater-reach-naive.csv").exists());
}

#[test]
fn nonholonomy_experiment_matches_golden() {
    let dir = tempfile::tempdir().unwrap();
    let o = freeflyer(&["experiment", "nonholonomy", "-o", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let s = json(&dir.path().join("nonholonomy.report.json"))["summary"].clone();
    let z = s["net_rotation_z"].as_f64().unwrap();
    assert!((z - s["golden"].as_f64().unwrap()).abs() < 1e-6);
    assert!(s["reversed"]["net_rotation_angle"].as_f64().unwrap() < 1e-9);
}

#[test]
fn attitude_experiment() {
    let dir = tempfile::tempdir().unwrap();
    let o = freeflyer(&["experiment", "attitude", "-o", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let report = json(&dir.path().join("attitude.report.json"));
    let s = &report["summary"];
    assert!(s["feedforward_peak"].as_f64().unwrap() < s["pd_only_peak"].as_f64().unwrap());
    assert_eq!(report["torque_limit_sweep"].as_array().unwrap().len(), 7);
}

#[test]
fn failed_claim_exits_1() {
    // with the base mass scaled up the controllers agree, so naive cannot be worse
    let dir = tempfile::tempdir().unwrap();
    let o =
        freeflyer(&["experiment", "overshoot", "--scenario", "heavy-base-reach", "-o", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1), "{}", stdout(&o));
    assert!(stdout(&o).contains("claim FAILS"));
}

#[test]
fn unknown_experiment_exits_2() {
    let o = freeflyer(&["experiment", "bogus"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn check_passes_on_a_pristine_build() {
    let o = freeflyer(&["check"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert_eq!(stdout(&o).lines().filter(|l| l.starts_with("PASS ")).count(), 7);
}

#[test]
fn check_names_injected_faults() {
    let o = freeflyer(&["check", "--inject", "lambda-sign"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("FAIL kinematics.explicit_barycentric_consistency"), "{}", stdout(&o));
    let o = freeflyer(&["check", "--inject", "euler-integrator"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("FAIL dynamics.momentum_conservation"), "{}", stdout(&o));
    assert!(stderr(&o).contains("dynamics.integrator_order"));
}

#[test]
fn describe_lists_and_resolves() {
    let o = freeflyer(&["describe"]);
    assert!(stdout(&o).lines().any(|l| l == "esa-dextrous"));
    let o = freeflyer(&["describe", "planar-tracking", "--set", "run.dt=0.0005"]);
    assert_eq!(o.status.code(), Some(0));
    let doc: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(doc["run"]["dt"], 0.0005);
    assert_eq!(doc["run"]["log_decimation"], 10);
    let o = freeflyer(&["describe", "no-such-scenario"]);
    assert_eq!(o.status.code(), Some(2));
}
