use super::PlanningError;
use crate::model::ReferenceSample;
use nalgebra::{Vector2, Vector3};
use serde::{Deserialize, Serialize};

pub const POLY_DEGREE: usize = 7;

/// Below this reference speed near a rest end the heading is taken from the end expansion [m/s].
pub const REST_SPEED: f64 = 1e-4;

/// Degree-7 polynomial in local time `s = t - t_start`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolySegment {
    pub coeffs: [f64; POLY_DEGREE + 1],
    pub t_start: f64,
    pub t_end: f64,
}

impl PolySegment {
    pub fn constant(value: f64, t_start: f64, t_end: f64) -> Self {
        let mut coeffs = [0.0; POLY_DEGREE + 1];
        coeffs[0] = value;
        Self { coeffs, t_start, t_end }
    }

    pub fn duration(&self) -> f64 {
        self.t_end - self.t_start
    }

    /// Derivative of the given order at absolute time `t` (Horner form).
    pub fn eval(&self, t: f64, order: usize) -> f64 {
        if order > POLY_DEGREE {
            return 0.0;
        }
        let s = t - self.t_start;
        let mut acc = 0.0;
        for j in (order..=POLY_DEGREE).rev() {
            acc = acc * s + self.coeffs[j] * falling(j, order);
        }
        acc
    }
}

/// `j! / (j - k)!`
pub(crate) fn falling(j: usize, k: usize) -> f64 {
    ((j + 1 - k)..=j).map(|v| v as f64).product()
}

/// Piecewise-polynomial planar reference at a fixed altitude.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySpec {
    pub x_segments: Vec<PolySegment>,
    pub y_segments: Vec<PolySegment>,
    pub altitude: f64,
    /// Incremented whenever the active trajectory is replaced.
    pub generation: u64,
}

impl TrajectorySpec {
    pub fn start_time(&self) -> f64 {
        self.x_segments.first().map_or(0.0, |s| s.t_start)
    }

    pub fn end_time(&self) -> f64 {
        self.x_segments.last().map_or(0.0, |s| s.t_end)
    }

    pub fn knots(&self) -> Vec<f64> {
        let mut k: Vec<f64> = self.x_segments.iter().map(|s| s.t_start).collect();
        k.push(self.end_time());
        k
    }

    fn index(&self, t: f64) -> Result<usize, PlanningError> {
        let (start, end) = (self.start_time(), self.end_time());
        if !(t >= start && t <= end) || self.x_segments.is_empty() {
            return Err(PlanningError::OutOfRange { t, start, end });
        }
        let i = self.x_segments.partition_point(|s| s.t_start <= t);
        Ok(i.saturating_sub(1).min(self.x_segments.len() - 1))
    }

    /// Derivative of order `order` (0..=4) at `t`; the `z` derivative is zero.
    pub fn evaluate(&self, t: f64, order: usize) -> Result<Vector3<f64>, PlanningError> {
        if order > 4 {
            return Err(PlanningError::Order(order));
        }
        let i = self.index(t)?;
        let z = if order == 0 { self.altitude } else { 0.0 };
        Ok(Vector3::new(self.x_segments[i].eval(t, order), self.y_segments[i].eval(t, order), z))
    }

    /// Evaluates from an explicit segment, for checks at shared knots.
    pub fn evaluate_segment(&self, i: usize, t: f64, order: usize) -> Vector3<f64> {
        let z = if order == 0 { self.altitude } else { 0.0 };
        Vector3::new(self.x_segments[i].eval(t, order), self.y_segments[i].eval(t, order), z)
    }

    pub fn clamp_time(&self, t: f64) -> f64 {
        t.clamp(self.start_time(), self.end_time())
    }

    /// Reference sample at `t`, clamped to the trajectory's time range.
    ///
    /// Close to a rest end the tangent is dominated by rounding. There the
    /// velocity is re-expanded about the end as `tau^(k-1) u(tau)`, with `k`
    /// the order of the first non-vanishing derivative, and heading and turn
    /// rate are taken from the well-conditioned factor `u`.
    pub fn sample(&self, t: f64, previous_heading: f64) -> ReferenceSample {
        let t = self.clamp_time(t);
        let d: [Vector3<f64>; 5] = std::array::from_fn(|k| self.evaluate(t, k).expect("time clamped into range"));
        let mut s = ReferenceSample::from_derivatives(&d, previous_heading);
        if s.speed > REST_SPEED {
            return s;
        }
        let stationary = |tau: f64| self.evaluate(tau, 1).is_ok_and(|v| v.xy().norm() <= crate::model::STATIONARY_SPEED);
        let from_left = t - self.start_time() > self.end_time() - t;
        let i = self.index(t).expect("time clamped into range");
        let (seg_x, seg_y) = (&self.x_segments[i], &self.y_segments[i]);
        let t0 = match (from_left, stationary(self.start_time()), stationary(self.end_time())) {
            (true, _, true) if i + 1 == self.x_segments.len() => self.end_time(),
            (false, true, _) if i == 0 => self.start_time(),
            _ if s.speed <= crate::model::STATIONARY_SPEED => t,
            _ => return s,
        };
        let deriv = |j| Vector2::new(seg_x.eval(t0, j), seg_y.eval(t0, j));
        let Some(k) = (1..=POLY_DEGREE).find(|&j| deriv(j).norm() > crate::model::STATIONARY_SPEED) else {
            return s;
        };
        let tau = t - t0;
        let factorial = |n: usize| (1..=n).map(|v| v as f64).product::<f64>();
        let series = |order: usize| {
            (k + order..=POLY_DEGREE).fold(Vector2::zeros(), |acc, j| {
                let p = j - k - order;
                acc + deriv(j) * (falling(j - k, order) * tau.powi(p as i32) / factorial(j - 1))
            })
        };
        let (u, ud, udd) = (series(0), series(1), series(2));
        let n2 = u.norm_squared();
        let left = tau < 0.0 || (tau == 0.0 && from_left);
        let sign = if left && k % 2 == 0 { -1.0 } else { 1.0 };
        let cross = |a: &Vector2<f64>, b: &Vector2<f64>| a.x * b.y - a.y * b.x;
        s.theta = (sign * u.y).atan2(sign * u.x);
        s.omega = cross(&u, &ud) / n2;
        s.omega_rate = cross(&u, &udd) / n2 - 2.0 * cross(&u, &ud) * u.dot(&ud) / (n2 * n2);
        s
    }

    /// Unsigned curvature radius; `+inf` for straight motion.
    pub fn curvature_radius(&self, t: f64) -> Result<f64, PlanningError> {
        let v = self.evaluate(t, 1)?;
        let a = self.evaluate(t, 2)?;
        let speed2 = v.x * v.x + v.y * v.y;
        if speed2.sqrt() <= 1e-6 {
            return Err(PlanningError::Stationary);
        }
        let cross = (v.x * a.y - v.y * a.x).abs();
        if cross < 1e-12 {
            return Ok(f64::INFINITY);
        }
        Ok(speed2.powf(1.5) / cross)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line() -> TrajectorySpec {
        let mut x = PolySegment::constant(1.0, 0.0, 2.0);
        x.coeffs[1] = 0.5;
        TrajectorySpec { x_segments: vec![x], y_segments: vec![PolySegment::constant(-1.0, 0.0, 2.0)], altitude: 1.0, generation: 0 }
    }

    #[test]
    fn constant_segment_has_zero_derivatives() {
        let spec = TrajectorySpec {
            x_segments: vec![PolySegment::constant(3.0, 0.0, 1.0)],
            y_segments: vec![PolySegment::constant(-2.0, 0.0, 1.0)],
            altitude: 1.0,
            generation: 0,
        };
        assert_eq!(spec.evaluate(0.4, 0).unwrap(), Vector3::new(3.0, -2.0, 1.0));
        for k in 1..=4 {
            assert_eq!(spec.evaluate(0.4, k).unwrap(), Vector3::zeros());
        }
    }

    #[test]
    fn out_of_range_refused() {
        assert!(matches!(line().evaluate(2.5, 0), Err(PlanningError::OutOfRange { .. })));
        assert!(matches!(line().evaluate(0.0, 5), Err(PlanningError::Order(5))));
    }

    #[test]
    fn straight_line_is_infinitely_flat() {
        assert_eq!(line().curvature_radius(1.0).unwrap(), f64::INFINITY);
        let s = line().sample(1.0, 0.0);
        assert!((s.speed - 0.5).abs() < 1e-15 && s.theta == 0.0);
    }

    #[test]
    fn stationary_curvature_is_an_error() {
        let spec = TrajectorySpec {
            x_segments: vec![PolySegment::constant(0.0, 0.0, 1.0)],
            y_segments: vec![PolySegment::constant(0.0, 0.0, 1.0)],
            altitude: 0.0,
            generation: 0,
        };
        assert_eq!(spec.curvature_radius(0.5), Err(PlanningError::Stationary));
    }

    #[test]
    fn falling_factorial() {
        assert_eq!(falling(7, 4), 840.0);
        assert_eq!(falling(3, 0), 1.0);
    }
}
