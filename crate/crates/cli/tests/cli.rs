use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn scenarios() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios")
}

fn autopath(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_autopath")).args(args).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn plan_writes_path_and_overlay() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = scenarios().join("scenario-a.json");
    let out = autopath(&["plan", "--scenario", scenario.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("plan.json")).unwrap()).unwrap();
    assert_eq!(json["version"], "autopath-plan/1");
    assert!(json["path"]["length"].as_f64().unwrap() > 170.0);
    assert!(!json["corridor"].as_array().unwrap().is_empty());
    let svg = std::fs::read_to_string(dir.path().join("plan.svg")).unwrap();
    assert!(svg.starts_with("<svg"));
}

#[test]
fn blocked_road_exits_with_no_path() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("fast.json");
    std::fs::write(&cfg, r#"{"version":"autopath-config/1","planner":{"max_planning_time":1.0}}"#).unwrap();
    let scenario = scenarios().join("blocked.json");
    let out = autopath(&[
        "plan",
        "--scenario",
        scenario.to_str().unwrap(),
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 2, "{}", stderr(&out));
    assert!(stderr(&out).contains("no path"));
    assert!(dir.path().join("plan.svg").exists());
    assert!(!dir.path().join("plan.json").exists());
}

#[test]
fn input_problems_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    assert_eq!(code(&autopath(&["plan", "--scenario", "builtin:nowhere", "--out", d])), 1);
    assert_eq!(code(&autopath(&["plan", "--scenario", "/nonexistent/scenario.json", "--out", d])), 1);
    assert_eq!(code(&autopath(&["plan", "--config", "/nonexistent/config.json", "--out", d])), 1);
    assert_eq!(code(&autopath(&["plan", "--no-such-flag"])), 1);

    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"version":"autopath-config/9"}"#).unwrap();
    assert_eq!(code(&autopath(&["plan", "--config", bad.to_str().unwrap(), "--out", d])), 1);
}

#[test]
fn map_validation_reports_counts_and_errors() {
    let good = scenarios().join("maps").join("short.json");
    let out = autopath(&["map", "validate", "--map", good.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(String::from_utf8_lossy(&out.stdout).contains("ok ("));

    let dir = tempfile::tempdir().unwrap();
    let broken = dir.path().join("broken.json");
    std::fs::write(&broken, r#"{"meta":{"version":"x"},"nodes":[],"edges":[],"boundaries":[]}"#).unwrap();
    assert_eq!(code(&autopath(&["map", "validate", "--map", broken.to_str().unwrap()])), 1);
}

#[test]
fn run_writes_trace_metrics_and_plot() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = scenarios().join("scp-root.json");
    let out = autopath(&["run", "--scenario", scenario.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let trace = std::fs::read_to_string(dir.path().join("trace.csv")).unwrap();
    assert!(trace.starts_with("t,x,y,theta,v,psi,a_cmd,steer_cmd,min_obst_dist\n"));
    assert!(trace.lines().count() > 100);
    let metrics: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("metrics.json")).unwrap()).unwrap();
    assert_eq!(metrics["success"], true);
    assert!(dir.path().join("commands.svg").exists());
}
