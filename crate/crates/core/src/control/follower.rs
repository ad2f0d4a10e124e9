use super::{positive, GainError};
use crate::model::{PayloadParams, GRAVITY};
use nalgebra::{Matrix4, Vector2, Vector3, Vector4};
use serde::{Deserialize, Serialize};
use std::collections::VecDeque;

/// Radii beyond this are treated as straight motion [m].
pub const STRAIGHT_RADIUS: f64 = 1e4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FollowerGains {
    pub kf1: f64,
    pub kf2: f64,
    pub md: f64,
    pub bd: f64,
    pub kd: f64,
    pub f_lower: f64,
    pub f_upper: f64,
}

impl Default for FollowerGains {
    fn default() -> Self {
        Self { kf1: 1.0, kf2: 3.0, md: 1.5, bd: 2.0, kd: 13.6, f_lower: 0.2, f_upper: 0.3 }
    }
}

impl FollowerGains {
    pub fn validate(&self) -> Result<(), GainError> {
        positive("kf1", self.kf1)?;
        positive("kf2", self.kf2)?;
        positive("md", self.md)?;
        positive("bd", self.bd)?;
        positive("kd", self.kd)?;
        if !(self.f_lower > 0.0 && self.f_lower < self.f_upper) {
            return Err(GainError::Thresholds(self.f_lower, self.f_upper));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TriggerMode {
    /// Force following.
    Enabled,
    /// Position hold at the latched `hold_x`.
    Disabled,
}

/// Hysteresis switch between force following and position hold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TriggerState {
    pub mode: TriggerMode,
    pub hold_x: f64,
    /// Number of transitions into [`TriggerMode::Enabled`].
    pub events: u32,
}

impl TriggerState {
    pub fn new(hold_x: f64) -> Self {
        Self { mode: TriggerMode::Disabled, hold_x, events: 0 }
    }

    pub fn update(&mut self, force_x: f64, position_x: f64, g: &FollowerGains) {
        match self.mode {
            TriggerMode::Disabled if force_x.abs() >= g.f_upper => {
                self.mode = TriggerMode::Enabled;
                self.events += 1;
            }
            TriggerMode::Enabled if force_x.abs() <= g.f_lower => {
                self.mode = TriggerMode::Disabled;
                self.hold_x = position_x;
            }
            _ => {}
        }
    }
}

/// Longitudinal force command; call after [`TriggerState::update`].
pub fn follower_longitudinal_control(trigger: &TriggerState, velocity_x: f64, force_x: f64, position_x: f64, g: &FollowerGains) -> f64 {
    match trigger.mode {
        TriggerMode::Enabled => g.kf1 * velocity_x + force_x,
        TriggerMode::Disabled => g.kf2 * (trigger.hold_x - position_x),
    }
}

/// `k_d = m_p g / (2 l2 cos(theta_yd))`, the stiffness matching the cable's restoring force.
pub fn impedance_stiffness(payload_mass: f64, l2: f64, theta_yd: f64) -> f64 {
    payload_mass * GRAVITY / (2.0 * l2 * theta_yd.cos())
}

/// Horizontal offset of the follower from `c2` implied by its cable force.
///
/// `force` is in the follower's frame. The cable tilt comes from the ratio of
/// the vertical share to the force magnitude; its horizontal projection is
/// split along the horizontal force direction.
pub fn cable_offset_from_force(force: &Vector3<f64>, params: &PayloadParams) -> Vector2<f64> {
    let n = force.norm();
    let horizontal = force.x.hypot(force.y);
    if n <= 0.0 || horizontal <= 0.0 {
        return Vector2::zeros();
    }
    let cos = (params.half_weight() / n).clamp(0.0, 1.0);
    let sin = (1.0 - cos * cos).sqrt();
    Vector2::new(force.x, force.y) * (params.follower_cable * sin / horizontal)
}

/// Transverse component of [`cable_offset_from_force`].
pub fn lateral_offset_from_force(force: &Vector3<f64>, params: &PayloadParams) -> f64 {
    cable_offset_from_force(force, params).y
}

/// Transverse force command from the impedance law.
///
/// `radius` is signed, positive for turns toward `+y`; infinite for straight motion.
pub fn follower_transverse_control(
    y: f64,
    y_rate: f64,
    speed: f64,
    radius: f64,
    follower_mass: f64,
    g: &FollowerGains,
    params: &PayloadParams,
) -> f64 {
    let a_n = if radius.is_finite() && radius.abs() <= STRAIGHT_RADIUS { speed * speed / radius } else { 0.0 };
    let y_d = params.follower_cable * (a_n / GRAVITY).atan().sin();
    let f_n = params.mass * a_n / 2.0;
    let e = y - y_d;
    f_n - follower_mass / g.md * (g.bd * y_rate + g.kd * e)
}

/// Local planar motion from a least-squares cubic fit of recent positions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalMotion {
    pub speed: f64,
    pub heading: f64,
    /// Signed curvature radius; infinite when straight.
    pub radius: f64,
}

/// Sliding-window curvature estimate built only from the vehicle's own positions.
#[derive(Debug, Clone)]
pub struct CurvatureEstimator {
    window: f64,
    samples: VecDeque<(f64, Vector2<f64>)>,
}

impl CurvatureEstimator {
    pub fn new(window: f64) -> Self {
        Self { window, samples: VecDeque::new() }
    }

    pub fn push(&mut self, t: f64, p: Vector2<f64>) {
        self.samples.push_back((t, p));
        while let Some(&(t0, _)) = self.samples.front() {
            if t - t0 > self.window {
                self.samples.pop_front();
            } else {
                break;
            }
        }
    }

    pub fn estimate(&self) -> Option<LocalMotion> {
        if self.samples.len() < 6 {
            return None;
        }
        let t_last = self.samples.back()?.0;
        let mut normal = Matrix4::<f64>::zeros();
        let mut rhs_x = Vector4::<f64>::zeros();
        let mut rhs_y = Vector4::<f64>::zeros();
        for &(t, p) in &self.samples {
            let s = t - t_last;
            let phi = Vector4::new(1.0, s, s * s, s * s * s);
            normal += phi * phi.transpose();
            rhs_x += phi * p.x;
            rhs_y += phi * p.y;
        }
        let chol = normal.cholesky()?;
        let cx = chol.solve(&rhs_x);
        let cy = chol.solve(&rhs_y);
        let (vx, vy, ax, ay) = (cx[1], cy[1], 2.0 * cx[2], 2.0 * cy[2]);
        let speed = vx.hypot(vy);
        let cross = vx * ay - vy * ax;
        let radius = if cross.abs() < 1e-12 { f64::INFINITY } else { speed.powi(3) / cross };
        Some(LocalMotion { speed, heading: vy.atan2(vx), radius })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trigger_hysteresis_cases() {
        let g = FollowerGains::default();
        let mut s = TriggerState::new(0.0);
        s.update(0.25, 0.0, &g);
        assert_eq!(s.mode, TriggerMode::Disabled);
        s.update(-0.35, 0.0, &g);
        assert_eq!((s.mode, s.events), (TriggerMode::Enabled, 1));
        s.update(0.25, 0.7, &g);
        assert_eq!(s.mode, TriggerMode::Enabled);
        s.update(0.15, 1.2, &g);
        assert_eq!((s.mode, s.hold_x), (TriggerMode::Disabled, 1.2));
    }

    #[test]
    fn longitudinal_cases() {
        let g = FollowerGains::default();
        let en = TriggerState { mode: TriggerMode::Enabled, hold_x: 0.0, events: 1 };
        assert!((follower_longitudinal_control(&en, 0.5, 0.3, 9.0, &g) - 0.8).abs() < 1e-15);
        let dis = TriggerState { mode: TriggerMode::Disabled, hold_x: 2.0, events: 1 };
        assert_eq!(follower_longitudinal_control(&dis, 0.5, 0.3, 2.0, &g), 0.0);
        assert!((follower_longitudinal_control(&dis, 0.5, 0.3, 1.9, &g) - 0.3).abs() < 1e-12);
    }

    #[test]
    fn straight_and_centered_needs_no_force() {
        let params = PayloadParams::default();
        let g = FollowerGains::default();
        assert_eq!(follower_transverse_control(0.0, 0.0, 1.0, f64::INFINITY, 1.5, &g, &params), 0.0);
    }

    #[test]
    fn stiffness_rule() {
        assert!((impedance_stiffness(0.5, 0.18, 0.0) - 13.625).abs() < 1e-12);
        assert!((impedance_stiffness(0.5, 0.2, 0.0) - 12.2625).abs() < 1e-12);
    }

    #[test]
    fn steady_turn_offset_is_the_desired_one() {
        let params = PayloadParams::default();
        let (v, rho) = (1.0, 2.0);
        let a_n = v * v / rho;
        let fy = params.mass * a_n / 2.0;
        let y = lateral_offset_from_force(&Vector3::new(0.0, fy, params.half_weight()), &params);
        let g = FollowerGains::default();
        let u = follower_transverse_control(y, 0.0, v, rho, 1.5, &g, &params);
        assert!((u - fy).abs() < 1e-12);
    }

    #[test]
    fn vertical_cable_has_no_offset() {
        let params = PayloadParams::default();
        assert_eq!(lateral_offset_from_force(&Vector3::new(0.0, 0.0, 2.45), &params), 0.0);
    }

    #[test]
    fn curvature_of_a_circle() {
        let mut est = CurvatureEstimator::new(0.5);
        let (r, w) = (3.0, 0.4);
        for k in 0..100 {
            let t = k as f64 * 0.01;
            est.push(t, Vector2::new(r * (w * t).cos(), r * (w * t).sin()));
        }
        let m = est.estimate().unwrap();
        assert!((m.radius - r).abs() / r < 1e-2, "{m:?}");
        assert!((m.speed - r * w).abs() < 1e-3);
    }
}
