mod common;

use common::{inline, scenario, FIGURE8};
use cotransport::sim::{
    build_trajectory, payload_kinetic_energy, run_scenario, step_payload, switch_spec, PayloadModel, SimError, World, LOG_COLUMNS,
    LOG_SCHEMA,
};
use cotransport::{BodyForces, PayloadParams, PayloadState};
use nalgebra::Vector3;
use proptest::prelude::*;

fn world(cfg: &cotransport::sim::ScenarioConfig) -> World {
    World::new(cfg, build_trajectory(cfg).unwrap()).unwrap()
}

fn advance_to(w: &mut World, t: f64) {
    while w.time() < t - 1e-9 {
        w.advance(&mut |_| {}).unwrap();
    }
}

#[test]
fn hover_is_a_fixed_point() {
    let cfg = inline("hover", 2.0, &[[0.0, 0.0, 0.0], [0.0, 0.0, 5.0]]);
    let mut w = world(&cfg);
    let mut prev = w.payload();
    let start = prev;
    for _ in 0..200 {
        w.advance(&mut |_| {}).unwrap();
        let now = w.payload();
        assert!((now.position - prev.position).norm() < 1e-9);
        assert!((now.theta - prev.theta).abs() < 1e-9);
        prev = now;
    }
    assert!((prev.position - start.position).norm() < 1e-9);
}

#[test]
fn hover_tensions_carry_the_payload() {
    let cfg = inline("hover", 0.5, &[[0.0, 0.0, 0.0], [0.0, 0.0, 5.0]]);
    let mut w = world(&cfg);
    let mut worst: f64 = 0.0;
    w.advance(&mut |s| worst = worst.max((s.forces.leader.z + s.forces.follower.z - cfg.payload.mass * 9.81).abs())).unwrap();
    assert!(worst < 1e-6, "vertical force imbalance {worst}");
}

#[test]
fn free_bar_conserves_kinetic_energy() {
    let p = PayloadParams::default();
    let zero = BodyForces { leader: Vector3::zeros(), follower: Vector3::zeros() };
    let mut s = PayloadState { theta: 0.3, v: 1.2, omega: 0.7, v_lat: -0.4, ..Default::default() };
    let e0 = payload_kinetic_energy(&s, &p);
    for _ in 0..10_000 {
        s = step_payload(&s, &zero, &p, PayloadModel::Rigid, 1e-3);
    }
    let drift = (payload_kinetic_energy(&s, &p) - e0).abs();
    assert!(drift < 1e-6, "energy drift {drift}");
}

#[test]
fn force_free_nonholonomic_bar_matches_closed_form() {
    // The reduced model carries no constraint torque, so omega stays put and v grows linearly.
    let p = PayloadParams::default();
    let zero = BodyForces { leader: Vector3::zeros(), follower: Vector3::zeros() };
    let mut s = PayloadState { theta: 0.3, v: 1.2, omega: 0.7, ..Default::default() };
    for _ in 0..10_000 {
        s = step_payload(&s, &zero, &p, PayloadModel::Nonholonomic, 1e-3);
    }
    assert!((s.omega - 0.7).abs() < 1e-12);
    assert!((s.theta - (0.3 + 7.0)).abs() < 1e-9);
    assert!((s.v - (1.2 - p.r_c2_p().x * 0.49 * 10.0)).abs() < 1e-9);
}

#[test]
fn halving_dt_moves_the_endpoint_little() {
    let end = |dt: f64| {
        let mut cfg = inline("dt", 10.0, &FIGURE8);
        cfg.dt = dt;
        let mut w = world(&cfg);
        advance_to(&mut w, 10.0);
        w.payload().position
    };
    let gap = (end(1e-3) - end(5e-4)).norm();
    assert!(gap < 1e-4, "endpoint moved {gap} m");
}

#[test]
fn same_seed_same_log() {
    let mut cfg = scenario("disturbance_3");
    cfg.duration = 5.0;
    let (mut a, mut b) = (Vec::new(), Vec::new());
    let ma = run_scenario(&cfg, Some(&mut a)).unwrap();
    let mb = run_scenario(&cfg, Some(&mut b)).unwrap();
    assert_eq!(a, b);
    assert_eq!(ma.metrics.to_json(), mb.metrics.to_json());
    cfg.seed = 2;
    let mut c = Vec::new();
    run_scenario(&cfg, Some(&mut c)).unwrap();
    assert_ne!(a, c);
}

#[test]
fn zero_duration_gives_empty_metrics() {
    let mut cfg = scenario("figure8");
    cfg.duration = 0.0;
    let mut log = Vec::new();
    let out = run_scenario(&cfg, Some(&mut log)).unwrap();
    assert_eq!(out.metrics.samples, 0);
    assert_eq!(out.metrics.rmse_x, None);
    assert_eq!(out.rows, 1);
}

#[test]
fn log_starts_with_schema_and_header() {
    let mut cfg = scenario("figure8");
    cfg.duration = 0.1;
    let mut log = Vec::new();
    let out = run_scenario(&cfg, Some(&mut log)).unwrap();
    let text = String::from_utf8(log).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some(LOG_SCHEMA));
    assert_eq!(lines.next().unwrap().split(',').count(), LOG_COLUMNS.len());
    let rows: Vec<_> = lines.collect();
    assert_eq!(rows.len() as u64, out.rows);
    let times: Vec<f64> = rows.iter().map(|r| r.split(',').next().unwrap().parse().unwrap()).collect();
    assert!(times.windows(2).all(|w| w[1] > w[0]));
}

#[test]
fn switch_with_a_gap_is_rejected() {
    let cfg = scenario("figure8");
    let mut w = world(&cfg);
    advance_to(&mut w, 10.0);
    let mut moved = w.trajectory().clone();
    for seg in &mut moved.x_segments {
        seg.coeffs[0] += 1.0;
    }
    let r = w.switch_trajectory(moved);
    assert!(matches!(r, Err(SimError::Switch { .. })), "{r:?}");
    assert_eq!(w.generation(), 0);
}

#[test]
fn switch_to_the_same_trajectory_changes_nothing() {
    let cfg = scenario("figure8");
    let (mut a, mut b) = (world(&cfg), world(&cfg));
    advance_to(&mut a, 5.0);
    advance_to(&mut b, 5.0);
    let same = b.trajectory().clone();
    b.switch_trajectory(same).unwrap();
    assert_eq!(b.generation(), 1);
    advance_to(&mut a, 8.0);
    advance_to(&mut b, 8.0);
    assert_eq!(a.payload(), b.payload());
}

#[test]
fn switch_handoff_is_smooth() {
    let cfg = scenario("switch");
    let spec = build_trajectory(&cfg).unwrap();
    let sw = cfg.switch.as_ref().unwrap();
    let next = switch_spec(&spec, sw.time, &sw.waypoints).unwrap();
    for k in 0..4 {
        let d = (spec.evaluate(sw.time, k).unwrap() - next.evaluate(sw.time, k).unwrap()).norm();
        assert!(d < 1e-6, "derivative {k} jumps by {d}");
    }
}

#[test]
fn bar_length_and_cables_hold() {
    let mut cfg = scenario("figure8");
    cfg.duration = 20.0;
    let m = run_scenario(&cfg, None).unwrap().metrics;
    assert!(m.max_bar_error.unwrap() < 1e-6);
    assert!(m.max_cable_error.unwrap() < 1e-6);
}

#[test]
fn estimated_feedback_keeps_c2_nearly_nonholonomic() {
    let m = run_scenario(&scenario("figure8_estimated"), None).unwrap().metrics;
    let ratio = m.lateral_speed_ratio.unwrap();
    assert!(ratio < 0.1, "lateral speed ratio {ratio}");
}

#[test]
fn rotor_level_run_stays_bounded() {
    let mut cfg = scenario("figure8");
    cfg.mode = cotransport::sim::Fidelity::Rotor;
    cfg.duration = 10.0;
    let m = run_scenario(&cfg, None).unwrap().metrics;
    assert!(m.rmse_x.unwrap() < 0.36 && m.rmse_y.unwrap() < 0.42, "{m:?}");
    assert!(m.max_attitude_defect.unwrap() < 1e-6);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn straight_runs_track_closely(dx in -4.0..4.0f64, dy in -4.0..4.0f64) {
        prop_assume!(dx.hypot(dy) > 0.5);
        let cfg = inline("line", 10.0, &[[0.0, 0.0, 0.0], [dx, dy, 10.0]]);
        let m = run_scenario(&cfg, None).unwrap().metrics;
        prop_assert!(m.rmse_x.unwrap().is_finite() && m.rmse_x.unwrap() >= 0.0);
        prop_assert!(m.rmse_y.unwrap() < 0.05);
        prop_assert!(m.max_bar_error.unwrap() < 1e-6);
    }
}
