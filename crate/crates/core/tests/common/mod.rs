#![allow(dead_code)]

use cotransport::planning::{
    generate_min_snap, grid_distance_map, plan_waypoints, snap_cost, Boundary, DerivativeConstraints, OccupancyGrid, PlannerConfig,
    PlanningError, Pose, Waypoint,
};
use cotransport::sim::ScenarioConfig;
use nalgebra::Vector2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::path::PathBuf;

pub const FIGURE8: [[f64; 3]; 8] = [
    [1.0, 1.0, 0.0],
    [3.0, 5.0, 16.0],
    [12.0, 0.0, 32.0],
    [3.0, -5.0, 48.0],
    [-3.0, 5.0, 64.0],
    [-12.0, 0.0, 80.0],
    [-3.0, -5.0, 96.0],
    [0.0, 0.0, 112.0],
];

pub fn scenario_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

pub fn scenario(name: &str) -> ScenarioConfig {
    ScenarioConfig::load(&scenario_dir().join(format!("{name}.toml"))).expect("shipped scenario loads")
}

/// Minimal force-level scenario through `waypoints`.
pub fn inline(name: &str, duration: f64, waypoints: &[[f64; 3]]) -> ScenarioConfig {
    let pts: Vec<String> = waypoints.iter().map(|w| format!("[{:?}, {:?}, {:?}]", w[0], w[1], w[2])).collect();
    let text = format!("name = \"{name}\"\nduration = {duration:?}\n[trajectory]\nwaypoints = [{}]\n", pts.join(", "));
    ScenarioConfig::parse(&text).expect("inline scenario parses")
}

/// Snap cost of a one-segment solution with free jerk at both ends, and the
/// smallest cost among `n` random perturbations that keep every constraint.
pub fn perturbed_snap_costs(n: usize, seed: u64) -> (f64, f64) {
    // Velocity and acceleration pinned at both ends leave s^3 (s - T)^3 (a + b s) free.
    let zero = Some(Vector2::zeros());
    let ends = DerivativeConstraints { velocity: zero, acceleration: zero, jerk: None };
    let boundary = Boundary { start: ends, end: ends };
    let t: f64 = 4.0;
    let pts = [Waypoint::new(0.0, 0.0, 0.0), Waypoint::new(3.0, -1.0, t)];
    let spec = generate_min_snap(&pts, &boundary, 1.0).unwrap();
    let best = snap_cost(&spec);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut lowest = f64::INFINITY;
    for _ in 0..n {
        let (a, b) = (rng.random_range(-1e-2..1e-2), rng.random_range(-1e-2..1e-2));
        // s^3 (s - T)^3 = s^6 - 3T s^5 + 3T^2 s^4 - T^3 s^3
        let base = [0.0, 0.0, 0.0, -t.powi(3), 3.0 * t * t, -3.0 * t, 1.0, 0.0];
        let mut bump = [0.0; 8];
        for k in 0..7 {
            bump[k] += a * base[k];
            bump[k + 1] += b * base[k];
        }
        let mut other = spec.clone();
        let axis = if rng.random_bool(0.5) { &mut other.x_segments[0] } else { &mut other.y_segments[0] };
        for (c, d) in axis.coeffs.iter_mut().zip(bump) {
            *c += d;
        }
        for k in 0..3 {
            for s in [0.0, t] {
                let gap = (other.evaluate(s, k).unwrap() - spec.evaluate(s, k).unwrap()).norm();
                assert!(gap < 1e-9, "perturbation broke order {k} at {s}");
            }
        }
        lowest = lowest.min(snap_cost(&other));
    }
    (best, lowest)
}

/// Largest jump of derivatives 0..=3 across the knots of the figure-8 trajectory.
pub fn figure8_knot_jump() -> f64 {
    let pts: Vec<Waypoint> = FIGURE8.iter().map(|w| Waypoint::new(w[0], w[1], w[2])).collect();
    let spec = generate_min_snap(&pts, &Boundary::default(), 1.0).unwrap();
    let mut worst: f64 = 0.0;
    for (i, pair) in spec.x_segments.windows(2).enumerate() {
        let t = pair[0].t_end;
        for k in 0..4 {
            worst = worst.max((spec.evaluate_segment(i, t, k) - spec.evaluate_segment(i + 1, t, k)).norm());
        }
    }
    worst
}

/// Random `size` x `size` grid at 1 m with the given fill ratio.
fn random_grid(rng: &mut ChaCha8Rng, size: usize, fill: f64) -> OccupancyGrid {
    let mut g = OccupancyGrid::new(size, size, 1.0).unwrap();
    for j in 0..size {
        for i in 0..size {
            if rng.random_bool(fill) {
                g.set(i, j, true);
            }
        }
    }
    g
}

fn polyline_length(w: &[Waypoint]) -> f64 {
    w.windows(2).map(|p| (p[1].x - p[0].x).hypot(p[1].y - p[0].y)).sum()
}

/// Planner result against the Dijkstra oracle on one random instance.
pub enum Outcome {
    Path { length: f64, oracle: f64, collision_free: bool },
    NoPath { oracle_blocked: bool },
    Skipped,
}

pub fn planner_instance(seed: u64) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut g = random_grid(&mut rng, 20, 0.2);
    let (s, e) = ((1usize, 1usize), (18usize, 18usize));
    g.set(s.0, s.1, false);
    g.set(e.0, e.1, false);
    let oracle = grid_distance_map(&g, (e.0 as i64, e.1 as i64))[s.1 * 20 + s.0];
    let start = Pose::new(s.0 as f64 + 0.5, s.1 as f64 + 0.5, rng.random_range(-3.0..3.0));
    let goal = Pose::new(e.0 as f64 + 0.5, e.1 as f64 + 0.5, 0.0);
    match plan_waypoints(&g, start, goal, &PlannerConfig::default()) {
        Ok(w) => Outcome::Path {
            length: polyline_length(&w),
            oracle,
            collision_free: w.windows(2).all(|p| g.segment_free((p[0].x, p[0].y), (p[1].x, p[1].y))),
        },
        Err(PlanningError::NoPath) => Outcome::NoPath { oracle_blocked: !oracle.is_finite() },
        Err(_) => Outcome::Skipped,
    }
}

/// Planner result on a 20 x 20 grid whose goal corner is walled off.
pub fn sealed_goal() -> Result<Vec<Waypoint>, PlanningError> {
    let mut g = OccupancyGrid::new(20, 20, 1.0).unwrap();
    for k in 14..20 {
        g.set(k, 14, true);
        g.set(14, k, true);
    }
    plan_waypoints(&g, Pose::new(1.5, 1.5, 0.0), Pose::new(18.5, 18.5, 0.0), &PlannerConfig::default())
}
