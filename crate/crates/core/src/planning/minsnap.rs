use super::trajectory::{falling, PolySegment, TrajectorySpec, POLY_DEGREE};
use super::{PlanningError, Waypoint};
use nalgebra::{DMatrix, DVector, Vector2};
use serde::{Deserialize, Serialize};

const NC: usize = POLY_DEGREE + 1;

/// Optional planar velocity, acceleration and jerk at one end of a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DerivativeConstraints {
    pub velocity: Option<Vector2<f64>>,
    pub acceleration: Option<Vector2<f64>>,
    pub jerk: Option<Vector2<f64>>,
}

impl DerivativeConstraints {
    pub fn rest() -> Self {
        let z = Some(Vector2::zeros());
        Self { velocity: z, acceleration: z, jerk: z }
    }

    fn axis(&self, k: usize) -> [Option<f64>; 3] {
        [self.velocity, self.acceleration, self.jerk].map(|d| d.map(|v| v[k]))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Boundary {
    pub start: DerivativeConstraints,
    pub end: DerivativeConstraints,
}

impl Default for Boundary {
    /// Rest to rest.
    fn default() -> Self {
        Self { start: DerivativeConstraints::rest(), end: DerivativeConstraints::rest() }
    }
}

/// Minimum-snap piecewise trajectory through `waypoints` at their times.
///
/// Each axis is solved independently as an equality-constrained QP through
/// its KKT system. Segments are parameterized in normalized time internally
/// and stored in local time.
pub fn generate_min_snap(waypoints: &[Waypoint], boundary: &Boundary, altitude: f64) -> Result<TrajectorySpec, PlanningError> {
    if waypoints.len() < 2 {
        return Err(PlanningError::DegenerateInput("at least two waypoints are required".into()));
    }
    for w in waypoints.windows(2) {
        if w[1].t <= w[0].t {
            return Err(PlanningError::DegenerateInput(format!("waypoint times must increase strictly ({} then {})", w[0].t, w[1].t)));
        }
    }
    if waypoints.iter().any(|w| !(w.x.is_finite() && w.y.is_finite() && w.t.is_finite())) {
        return Err(PlanningError::DegenerateInput("non-finite waypoint".into()));
    }
    let times: Vec<f64> = waypoints.iter().map(|w| w.t).collect();
    let xs: Vec<f64> = waypoints.iter().map(|w| w.x).collect();
    let ys: Vec<f64> = waypoints.iter().map(|w| w.y).collect();
    let cx = solve_axis(&times, &xs, boundary.start.axis(0), boundary.end.axis(0))?;
    let cy = solve_axis(&times, &ys, boundary.start.axis(1), boundary.end.axis(1))?;
    let seg = |coeffs: [f64; NC], i: usize| PolySegment { coeffs, t_start: times[i], t_end: times[i + 1] };
    Ok(TrajectorySpec {
        x_segments: cx.into_iter().enumerate().map(|(i, c)| seg(c, i)).collect(),
        y_segments: cy.into_iter().enumerate().map(|(i, c)| seg(c, i)).collect(),
        altitude,
        generation: 0,
    })
}

/// Normalized-time snap Gram matrix on `[0, 1]`.
fn unit_cost() -> DMatrix<f64> {
    DMatrix::from_fn(NC, NC, |i, j| if i < 4 || j < 4 { 0.0 } else { falling(i, 4) * falling(j, 4) / (i + j - 7) as f64 })
}

/// Row of `d^k p / dtau^k` at `u` (0 or 1) for a segment of duration `dur`.
fn derivative_row(k: usize, u: f64, dur: f64) -> [f64; NC] {
    let scale = dur.powi(-(k as i32));
    std::array::from_fn(|j| if j < k { 0.0 } else { falling(j, k) * u.powi((j - k) as i32) * scale })
}

fn solve_axis(times: &[f64], values: &[f64], start: [Option<f64>; 3], end: [Option<f64>; 3]) -> Result<Vec<[f64; NC]>, PlanningError> {
    let m = times.len() - 1;
    let n = NC * m;
    let durations: Vec<f64> = times.windows(2).map(|w| w[1] - w[0]).collect();
    let mut rows: Vec<(Vec<(usize, f64)>, f64)> = Vec::new();
    let row_at = |seg: usize, r: [f64; NC]| -> Vec<(usize, f64)> { r.iter().enumerate().map(|(j, v)| (seg * NC + j, *v)).collect() };

    for i in 0..m {
        rows.push((row_at(i, derivative_row(0, 0.0, durations[i])), values[i]));
        rows.push((row_at(i, derivative_row(0, 1.0, durations[i])), values[i + 1]));
    }
    for i in 0..m.saturating_sub(1) {
        for k in 1..=3 {
            let mut r = row_at(i, derivative_row(k, 1.0, durations[i]));
            r.extend(row_at(i + 1, derivative_row(k, 0.0, durations[i + 1])).into_iter().map(|(c, v)| (c, -v)));
            rows.push((r, 0.0));
        }
    }
    for (k, v) in start.iter().enumerate() {
        if let Some(v) = v {
            rows.push((row_at(0, derivative_row(k + 1, 0.0, durations[0])), *v));
        }
    }
    for (k, v) in end.iter().enumerate() {
        if let Some(v) = v {
            rows.push((row_at(m - 1, derivative_row(k + 1, 1.0, durations[m - 1])), *v));
        }
    }

    let nc = rows.len();
    let mut kkt = DMatrix::zeros(n + nc, n + nc);
    let q = unit_cost();
    for (i, dur) in durations.iter().enumerate() {
        let s = 2.0 / dur.powi(7);
        kkt.view_mut((i * NC, i * NC), (NC, NC)).copy_from(&(&q * s));
    }
    let mut rhs = DVector::zeros(n + nc);
    for (r, (entries, b)) in rows.iter().enumerate() {
        for &(c, v) in entries {
            kkt[(n + r, c)] = v;
            kkt[(c, n + r)] = v;
        }
        rhs[n + r] = *b;
    }

    let solution = match kkt.clone().lu().solve(&rhs) {
        Some(s) if s.iter().all(|v| v.is_finite()) && (&kkt * &s - &rhs).amax() < 1e-6 * (1.0 + rhs.amax()) => s,
        _ => {
            // cost-free directions remain (too few constraints); take the minimum-norm optimum
            let svd = kkt.clone().svd(true, true);
            let s = svd.solve(&rhs, 1e-12).map_err(|e| PlanningError::DegenerateInput(format!("KKT solve failed: {e}")))?;
            if (&kkt * &s - &rhs).amax() > 1e-6 * (1.0 + rhs.amax()) {
                return Err(PlanningError::DegenerateInput("inconsistent constraints".into()));
            }
            s
        }
    };

    Ok((0..m).map(|i| std::array::from_fn(|j| solution[i * NC + j] / durations[i].powi(j as i32))).collect())
}

/// Integrated squared snap summed over both axes.
pub fn snap_cost(spec: &TrajectorySpec) -> f64 {
    spec.x_segments.iter().chain(&spec.y_segments).map(segment_cost).sum()
}

fn segment_cost(seg: &PolySegment) -> f64 {
    let d = seg.duration();
    let mut c = 0.0;
    for i in 4..NC {
        for j in 4..NC {
            let p = (i + j - 7) as i32;
            c += seg.coeffs[i] * seg.coeffs[j] * falling(i, 4) * falling(j, 4) * d.powi(p) / p as f64;
        }
    }
    c
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coincident_waypoints_give_constant() {
        let w = [Waypoint::new(2.0, -1.0, 0.0), Waypoint::new(2.0, -1.0, 3.0)];
        let spec = generate_min_snap(&w, &Boundary::default(), 1.0).unwrap();
        assert!(snap_cost(&spec) < 1e-20);
        for t in [0.0, 1.3, 3.0] {
            let p = spec.evaluate(t, 0).unwrap();
            assert!((p.x - 2.0).abs() < 1e-12 && (p.y + 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn duplicate_times_rejected() {
        let w = [Waypoint::new(0.0, 0.0, 1.0), Waypoint::new(1.0, 0.0, 1.0)];
        assert!(matches!(generate_min_snap(&w, &Boundary::default(), 0.0), Err(PlanningError::DegenerateInput(_))));
    }

    #[test]
    fn free_boundary_still_solves() {
        let w = [Waypoint::new(0.0, 0.0, 0.0), Waypoint::new(1.0, 2.0, 1.0)];
        let b = Boundary { start: DerivativeConstraints::default(), end: DerivativeConstraints::default() };
        let spec = generate_min_snap(&w, &b, 0.0).unwrap();
        let p = spec.evaluate(1.0, 0).unwrap();
        assert!((p.x - 1.0).abs() < 1e-9 && (p.y - 2.0).abs() < 1e-9);
        assert!(snap_cost(&spec) < 1e-12);
    }

    #[test]
    fn interpolates_and_stays_continuous() {
        let w = [Waypoint::new(0.0, 0.0, 0.0), Waypoint::new(1.0, 2.0, 2.0), Waypoint::new(3.0, 1.0, 3.5), Waypoint::new(4.0, -1.0, 6.0)];
        let spec = generate_min_snap(&w, &Boundary::default(), 0.0).unwrap();
        for wp in &w {
            let p = spec.evaluate(wp.t, 0).unwrap();
            assert!((p.x - wp.x).abs() < 1e-8 && (p.y - wp.y).abs() < 1e-8);
        }
        for i in 0..2 {
            let t = w[i + 1].t;
            for k in 0..=3 {
                let gap = spec.evaluate_segment(i, t, k) - spec.evaluate_segment(i + 1, t, k);
                assert!(gap.norm() < 1e-6, "order {k} gap {gap}");
            }
        }
    }
}
