//! One PASS/FAIL line per acceptance criterion. Exits nonzero if any fails.

mod common;

use common::{scenario, Outcome};
use cotransport::control::impedance_stiffness;
use cotransport::estimation::{ukf_predict, ukf_update, GaussianBelief, SigmaConfig};
use cotransport::planning::PlanningError;
use cotransport::sim::{run_scenario, run_to_dir, Metrics};
use nalgebra::{DMatrix, DVector};
use std::process::ExitCode;
use std::time::Instant;

struct Report {
    failed: usize,
}

impl Report {
    fn check(&mut self, id: &str, pass: bool, detail: String) {
        println!("{} {id}: {detail}", if pass { "PASS" } else { "FAIL" });
        if !pass {
            self.failed += 1;
        }
    }
}

fn val(v: Option<f64>) -> f64 {
    v.unwrap_or(f64::NAN)
}

fn figure8_tracking(r: &mut Report, m: &Metrics, secs: f64) {
    let (x, y, e1, e2) = (val(m.rmse_x), val(m.rmse_y), val(m.rmse_eta1), val(m.rmse_eta2));
    let pass = x <= 0.36 && y <= 0.42 && e1 <= 0.13 && e2 <= 0.13 && secs < 60.0;
    r.check(
        "figure8_tracking",
        pass,
        format!("rmse x {x:.3e} <= 0.36, y {y:.3e} <= 0.42, eta1 {e1:.3e} / eta2 {e2:.3e} <= 0.13, runtime {secs:.1} s < 60"),
    );
}

fn lyapunov_descent(r: &mut Report, m: &Metrics) {
    let inc = val(m.max_v2_increase);
    r.check("lyapunov_descent", inc <= 1e-9, format!("max V2 step increase after 2 s {inc:.3e} <= 1e-9"));
}

fn impedance_gain(r: &mut Report) {
    let a = impedance_stiffness(0.5, 0.18, 0.0);
    let b = impedance_stiffness(0.5, 0.2, 0.0);
    let (ea, eb) = ((a - 13.6).abs() / 13.6, (b - 12.26).abs() / 12.26);
    r.check(
        "impedance_gain",
        ea <= 0.005 && eb <= 0.005,
        format!("k_d {a:.4} vs 13.6 ({:.3}%), {b:.4} vs 12.26 ({:.3}%), limit 0.5%", ea * 100.0, eb * 100.0),
    );
}

/// Largest mean gap between the UKF and a closed-form Kalman step over a few linear problems.
fn ukf_kalman_gap() -> f64 {
    let mut worst: f64 = 0.0;
    for n in 1..=4 {
        let a = DMatrix::from_fn(n, n, |i, j| if i == j { 1.0 } else { 0.1 * (i as f64 - j as f64) });
        let h = DMatrix::from_fn(1, n, |_, j| 1.0 + j as f64);
        let q = DMatrix::identity(n, n) * 0.02;
        let rr = DMatrix::identity(1, 1) * 0.3;
        let mut ukf = GaussianBelief::new(DVector::from_fn(n, |i, _| i as f64), DMatrix::identity(n, n)).unwrap();
        let mut kf = ukf.clone();
        for k in 0..25 {
            let y = DVector::from_element(1, (k as f64 * 0.4).sin() * 3.0);
            ukf = ukf_predict(&ukf, |x| &a * x, &q, &SigmaConfig::default()).unwrap();
            ukf = ukf_update(&ukf, |x| &h * x, &rr, &y, &SigmaConfig::default()).unwrap();
            let mean = &a * &kf.mean;
            let cov = &a * &kf.cov * a.transpose() + &q;
            let s = &h * &cov * h.transpose() + &rr;
            let gain = &cov * h.transpose() * s.try_inverse().unwrap();
            kf.mean = &mean + &gain * (&y - &h * &mean);
            kf.cov = &cov - &gain * &h * &cov;
            worst = worst.max((&ukf.mean - &kf.mean).amax());
        }
    }
    worst
}

fn ukf_oracle(r: &mut Report, m: &Metrics) {
    let gap = ukf_kalman_gap();
    let rel = val(m.leader_force_relative_error);
    r.check(
        "ukf_oracle",
        gap <= 1e-8 && rel < 0.01,
        format!("UKF vs Kalman mean gap {gap:.3e} <= 1e-8; follower force estimate error {:.3}% < 1%", rel * 100.0),
    );
}

fn eta_residual(r: &mut Report, m: &Metrics) {
    let res = val(m.eta_residual_rms);
    r.check("eta_residual", res < 1e-6, format!("closed-loop eta residual RMS {res:.3e} < 1e-6"));
}

fn min_snap(r: &mut Report) {
    let (best, lowest) = common::perturbed_snap_costs(100, 7);
    let jump = common::figure8_knot_jump();
    r.check(
        "min_snap",
        best < lowest && jump <= 1e-6,
        format!("optimal snap {best:.6e} < best of 100 perturbations {lowest:.6e}; knot jump {jump:.3e} <= 1e-6"),
    );
}

fn planner(r: &mut Report) {
    let (mut solved, mut bad, mut worst_ratio) = (0, Vec::new(), 0.0f64);
    for seed in 0..50 {
        match common::planner_instance(seed) {
            Outcome::Path { length, oracle, collision_free } => {
                solved += 1;
                worst_ratio = worst_ratio.max(length / oracle);
                if !collision_free || length > 1.2 * oracle + 1e-9 {
                    bad.push(seed);
                }
            }
            Outcome::NoPath { oracle_blocked: true } => {}
            _ => bad.push(seed),
        }
    }
    let sealed = common::sealed_goal() == Err(PlanningError::NoPath);
    r.check(
        "planner",
        bad.is_empty() && sealed,
        format!("50 grids, {solved} solvable, worst length ratio {worst_ratio:.3} <= 1.2, failing seeds {bad:?}, sealed goal -> no path: {sealed}"),
    );
}

fn noise_trend(r: &mut Report) {
    let rows: Vec<Metrics> = (1..=3)
        .map(|k| run_scenario(&scenario(&format!("disturbance_{k}")), None).map(|o| o.metrics))
        .collect::<Result<_, _>>()
        .unwrap_or_default();
    if rows.len() != 3 {
        r.check("noise_trend", false, "a disturbance row failed to run".into());
        return;
    }
    let pick = |m: &Metrics| {
        [
            ("x_e", m.rmse_x),
            ("y_e", m.rmse_y),
            ("eta1", m.rmse_eta1),
            ("eta2", m.rmse_eta2),
            ("F_Fx", m.follower_force_rmse_x),
            ("F_Fy", m.follower_force_rmse_y),
        ]
        .map(|(k, v)| (k, val(v)))
    };
    let table: Vec<_> = rows.iter().map(pick).collect();
    let mut pass = true;
    let mut detail = Vec::new();
    for i in 0..6 {
        let v: Vec<f64> = table.iter().map(|row| row[i].1).collect();
        let ok = v.iter().all(|x| x.is_finite()) && v[0] <= 1.1 * v[1] && v[1] <= 1.1 * v[2];
        pass &= ok;
        detail.push(format!("{} {:.3}/{:.3}/{:.3}", table[0][i].0, v[0], v[1], v[2]));
    }
    r.check("noise_trend", pass, format!("row1/row2/row3 within 10%: {}", detail.join(", ")));
}

fn trajectory_switch(r: &mut Report) {
    let Ok(out) = run_scenario(&scenario("switch"), None) else {
        r.check("trajectory_switch", false, "switch run faulted".into());
        return;
    };
    let Some(s) = out.metrics.switch else {
        r.check("trajectory_switch", false, "no switch recorded".into());
        return;
    };
    let (bx, by, rx, ry) = (val(s.baseline_rms_x), val(s.baseline_rms_y), val(s.recovery_rms_x), val(s.recovery_rms_y));
    r.check("trajectory_switch", rx < 2.0 * bx && ry < 2.0 * by, format!("recovery RMS x {rx:.3} < 2 x {bx:.3}, y {ry:.3} < 2 x {by:.3}"));
}

fn determinism(r: &mut Report) {
    let mut cfg = scenario("disturbance_3");
    cfg.duration = 20.0;
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    let files: Vec<Vec<u8>> = dirs
        .iter()
        .map(|d| {
            let out = run_to_dir(&cfg, d.path()).unwrap();
            std::fs::read(out.metrics_path.unwrap()).unwrap()
        })
        .collect();
    r.check("determinism", files[0] == files[1], format!("two seeded runs, metrics files of {} bytes identical", files[0].len()));
}

fn main() -> ExitCode {
    let mut r = Report { failed: 0 };
    let start = Instant::now();
    let fig8 = run_scenario(&scenario("figure8"), None).expect("figure-8 run").metrics;
    let secs = start.elapsed().as_secs_f64();
    figure8_tracking(&mut r, &fig8, secs);
    lyapunov_descent(&mut r, &fig8);
    impedance_gain(&mut r);
    ukf_oracle(&mut r, &fig8);
    eta_residual(&mut r, &fig8);
    min_snap(&mut r);
    planner(&mut r);
    noise_trend(&mut r);
    trajectory_switch(&mut r);
    determinism(&mut r);
    println!("acceptance: {} of 10 criteria failed", r.failed);
    if r.failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
