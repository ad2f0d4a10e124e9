mod common;

use std::path::Path;
use std::process::{Command, Output};

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cotransport")).args(args).output().expect("binary runs")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn validate_accepts_every_shipped_scenario() {
    for entry in std::fs::read_dir(common::scenario_dir()).unwrap() {
        let p = entry.unwrap().path();
        if p.extension().is_some_and(|e| e == "toml") {
            let out = cli(&["validate", path(&p)]);
            assert!(out.status.success(), "{}: {}", p.display(), String::from_utf8_lossy(&out.stderr));
        }
    }
}

#[test]
fn validate_rejects_a_bad_scenario() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "name = \"x\"\nduration = 1.0\ndt = 0.5\n[trajectory]\nwaypoints = [[0.0, 0.0, 0.0], [1.0, 0.0, 1.0]]\n").unwrap();
    let out = cli(&["validate", path(&bad)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("dt"));
    assert_eq!(cli(&["validate", "/nonexistent.toml"]).status.code(), Some(1));
}

#[test]
fn run_twice_gives_identical_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = common::scenario_dir().join("s_curve.toml");
    let read = |sub: &str| {
        let out_dir = dir.path().join(sub);
        let out = cli(&["run", path(&scenario), "--seed", "5", "--out-dir", path(&out_dir), "--format", "json"]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        let metrics = std::fs::read(out_dir.join("s_curve.metrics.json")).unwrap();
        assert_eq!(metrics, out.stdout);
        let log = std::fs::read_to_string(out_dir.join("s_curve.csv")).unwrap();
        assert!(log.starts_with("# cotransport-log v1\n"));
        metrics
    };
    let (a, b) = (read("a"), read("b"));
    assert_eq!(a, b);
    let json: serde_json::Value = serde_json::from_slice(&a).unwrap();
    assert_eq!(json["seed"], 5);
}

#[test]
fn plan_writes_waypoints_and_flags_blocked_maps() {
    let grids = common::scenario_dir();
    let out = cli(&["plan", path(&grids.join("warehouse.grid")), "2,2,0", "17,13,0"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().next(), Some("x,y,t"));
    assert!(text.lines().count() >= 3);

    let out = cli(&["plan", path(&grids.join("blocked.grid")), "2,2,0", "17,13,0"]);
    assert_eq!(out.status.code(), Some(3));

    let out = cli(&["plan", path(&grids.join("warehouse.grid")), "0.2,0.2,0", "17,13,0"]);
    assert_eq!(out.status.code(), Some(1), "start inside the border wall");
}

#[test]
fn traj_emits_spec_or_samples() {
    let dir = tempfile::tempdir().unwrap();
    let wp = common::scenario_dir().join("figure8.waypoints");
    let out = cli(&["traj", path(&wp), "--format", "json", "--out-dir", path(dir.path())]);
    assert!(out.status.success());
    let spec: cotransport::planning::TrajectorySpec =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("trajectory.json")).unwrap()).unwrap();
    assert_eq!(spec.x_segments.len(), 7);

    let out = cli(&["traj", path(&wp), "--rate", "2"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 1 + 225);
}
