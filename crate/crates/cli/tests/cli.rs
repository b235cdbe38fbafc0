use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name)
}

fn hexctl(args: &[&str]) -> Output {
    hexctl_with_threads(args, "1")
}

fn hexctl_with_threads(args: &[&str], threads: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hexctl"))
        .args(args)
        .env("HEXCTL_THREADS", threads)
        .output()
        .expect("spawn hexctl")
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn path_str(p: &Path) -> &str {
    p.to_str().expect("utf-8 path")
}

#[test]
fn limits_of_selected_design() {
    let design = fixture("selected_design.json");
    let out = hexctl(&["limits", path_str(&design)]);
    assert_eq!(out.status.code(), Some(0));
    let report = stdout_json(&out);
    let f_max = report["f_max"].as_f64().unwrap();
    assert!((f_max - 2.0).abs() / 2.0 < 0.01, "f_max {f_max}");
    assert_eq!(report["rank"], 6);
}

#[test]
fn limit_along_a_direction_is_at_least_worst_case() {
    let design = fixture("selected_design.json");
    let out = hexctl(&["limits", path_str(&design), "--direction", "0,0,2"]);
    assert_eq!(out.status.code(), Some(0));
    let report = stdout_json(&out);
    let along = report["force_limit_along"].as_f64().unwrap();
    assert!(along >= report["f_max"].as_f64().unwrap());
    assert_eq!(report["direction"], serde_json::json!([0.0, 0.0, 1.0]));
}

#[test]
fn singular_design_exits_2() {
    let design = fixture("singular_design.json");
    let out = hexctl(&["limits", path_str(&design)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty());
}

#[test]
fn malformed_input_exits_1() {
    let design = fixture("selected_design.json");
    let out = hexctl(&["limits", path_str(&design), "--direction", "1,0"]);
    assert_eq!(out.status.code(), Some(1));
    let out = hexctl(&["limits", path_str(&design), "--direction", "0,0,0"]);
    assert_eq!(out.status.code(), Some(1));
    let out = hexctl(&["limits", "/nonexistent/design.json"]);
    assert_eq!(out.status.code(), Some(1));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("settings.json");
    fs::write(&bad, r#"{"n_starts": 0}"#).unwrap();
    let out_dir = dir.path().join("out");
    let out = hexctl(&["design", "--config", path_str(&bad), "--out", path_str(&out_dir)]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn design_is_reproducible_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str, threads: &str| {
        let out_dir = dir.path().join(name);
        let out = hexctl_with_threads(
            &[
                "design",
                "--lambda",
                "0,0.5,1",
                "--n-starts",
                "1",
                "--seed",
                "7",
                "--out",
                path_str(&out_dir),
            ],
            threads,
        );
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        let front = fs::read_to_string(out_dir.join("front.csv")).unwrap();
        let selected = fs::read_to_string(out_dir.join("selected_design.json")).unwrap();
        (front, selected, stdout_json(&out))
    };
    let (front_a, selected_a, summary_a) = run("a", "1");
    let (front_b, selected_b, summary_b) = run("b", "3");
    assert_eq!(front_a, front_b);
    assert_eq!(selected_a, selected_b);
    assert_eq!(summary_a["p_star"], summary_b["p_star"]);
    assert_eq!(front_a.lines().count(), 4);
    assert!(front_a.starts_with("lambda,p,q,f_max,m_max,phi1_deg"));

    let written = dir.path().join("a/selected_design.json");
    let out = hexctl(&["limits", path_str(&written)]);
    assert_eq!(out.status.code(), Some(0));
}

fn simulate(scenario: &Path, out_dir: &Path) -> (Output, Value) {
    let out = hexctl(&["simulate", path_str(scenario), "--out", path_str(out_dir)]);
    let metrics = fs::read_to_string(out_dir.join("metrics.json"))
        .ok()
        .and_then(|t| serde_json::from_str(&t).ok())
        .unwrap_or(Value::Null);
    (out, metrics)
}

#[test]
fn payload_run_settles_slower_than_unloaded_run() {
    let dir = tempfile::tempdir().unwrap();
    let (out, noload) = simulate(&fixture("noload_mission.json"), &dir.path().join("noload"));
    assert_eq!(out.status.code(), Some(0));
    let (out, payload) = simulate(&fixture("payload_mission.json"), &dir.path().join("payload"));
    assert_eq!(out.status.code(), Some(0));
    let a = noload["total_settling_time"].as_f64().unwrap();
    let b = payload["total_settling_time"].as_f64().unwrap();
    assert!(b > a, "loaded {b} vs unloaded {a}");
}

#[test]
fn every_scenario_fixture_completes() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["position_step", "attitude_step", "waypoint_mission"] {
        let out_dir = dir.path().join(name);
        let (out, metrics) = simulate(&fixture(&format!("{name}.json")), &out_dir);
        assert_eq!(out.status.code(), Some(0), "{name}");
        assert_eq!(metrics["outcome"], "completed", "{name}");
        assert_eq!(stdout_json(&out), metrics);
        let log = fs::read_to_string(out_dir.join("log.csv")).unwrap();
        let header = log.lines().next().unwrap();
        assert_eq!(header.split(',').count(), 27);
        assert!(log.lines().count() > 100);
    }
}

#[test]
fn timed_out_run_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let mut sc: Value =
        serde_json::from_str(&fs::read_to_string(fixture("position_step.json")).unwrap()).unwrap();
    sc["t_max"] = Value::from(0.5);
    let path = dir.path().join("short.json");
    fs::write(&path, sc.to_string()).unwrap();
    let (out, metrics) = simulate(&path, &dir.path().join("out"));
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(metrics["outcome"], "timed_out");
}

#[test]
fn singular_scenario_design_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let mut sc: Value =
        serde_json::from_str(&fs::read_to_string(fixture("position_step.json")).unwrap()).unwrap();
    for p in sc["design"]["propellers"].as_array_mut().unwrap() {
        p["phi_deg"] = Value::from(0.0);
    }
    let path = dir.path().join("flat.json");
    fs::write(&path, sc.to_string()).unwrap();
    let (out, _) = simulate(&path, &dir.path().join("out"));
    assert_eq!(out.status.code(), Some(2));
}
