use super::{positive, GainError};
use crate::model::{error_kinematics, PayloadParams, ReferenceSample, TrackingError};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LeaderGains {
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
    pub kv: f64,
    pub k_omega: f64,
}

impl Default for LeaderGains {
    fn default() -> Self {
        Self { k1: 3.0, k2: 1.0, k3: 5.0, kv: 5.0, k_omega: 11.0 }
    }
}

impl LeaderGains {
    pub fn validate(&self) -> Result<(), GainError> {
        positive("k1", self.k1)?;
        positive("k2", self.k2)?;
        positive("k3", self.k3)?;
        positive("kv", self.kv)?;
        positive("k_omega", self.k_omega)
    }
}

/// Box limits on the leader's planar force command [N].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForceBounds {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Default for ForceBounds {
    fn default() -> Self {
        Self { x_min: -2.6, x_max: 2.0, y_min: -7.0, y_max: 10.0 }
    }
}

impl ForceBounds {
    pub fn unbounded() -> Self {
        Self { x_min: f64::NEG_INFINITY, x_max: f64::INFINITY, y_min: f64::NEG_INFINITY, y_max: f64::INFINITY }
    }

    pub fn validate(&self) -> Result<(), GainError> {
        if self.x_min < self.x_max && self.y_min < self.y_max {
            Ok(())
        } else {
            Err(GainError::Bounds)
        }
    }

    /// Clamps `(fx, fy)`; the flag is set when either axis was limited.
    pub fn apply(&self, fx: f64, fy: f64) -> ((f64, f64), bool) {
        let cx = fx.clamp(self.x_min, self.x_max);
        let cy = fy.clamp(self.y_min, self.y_max);
        ((cx, cy), cx != fx || cy != fy)
    }
}

/// Desired longitudinal speed and yaw rate `(v_d, omega_d)`.
pub fn kinematic_control(err: &TrackingError, reference: &ReferenceSample, g: &LeaderGains) -> (f64, f64) {
    let v_d = reference.speed * err.theta.cos() + g.k1 * err.x;
    let omega_d = reference.omega + reference.speed * g.k2 * err.y + g.k3 * err.theta.sin();
    (v_d, omega_d)
}

/// Analytic time derivatives of [`kinematic_control`] along the error kinematics.
pub fn desired_rates(err: &TrackingError, v: f64, omega: f64, reference: &ReferenceSample, g: &LeaderGains) -> (f64, f64) {
    let (xd, yd, thd) = error_kinematics(err, v, omega, reference);
    let (s, c) = err.theta.sin_cos();
    let vr = reference.speed;
    let v_d_dot = reference.speed_rate * c - vr * s * thd + g.k1 * xd;
    let omega_d_dot = reference.omega_rate + g.k2 * (reference.speed_rate * err.y + vr * yd) + g.k3 * c * thd;
    (v_d_dot, omega_d_dot)
}

/// Leader body-frame force `(F_Lx, F_Ly)` on the payload.
///
/// `follower_fy` is the follower's estimated transverse force, which the
/// leader cancels in the yaw balance.
pub fn leader_force_control(
    err: &TrackingError,
    omega: f64,
    v_d_dot: f64,
    omega_d_dot: f64,
    follower_fy: f64,
    params: &PayloadParams,
    g: &LeaderGains,
) -> (f64, f64) {
    let m = params.mass;
    let fx = m * (v_d_dot + err.x + g.kv * err.eta1) + m * params.r_c2_p().x * omega * omega;
    let fy = 2.0 * params.izz / params.length * (omega_d_dot + g.k_omega * err.eta2 + err.theta.sin() / g.k2) + follower_fy;
    (fx, fy)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{payload_accel, payload_angular_accel, BodyForces};
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn kinematic_cases() {
        let g = LeaderGains::default();
        let r = ReferenceSample { speed: 1.0, omega: 0.3, ..Default::default() };
        assert_eq!(kinematic_control(&TrackingError::default(), &r, &g), (1.0, 0.3));

        let e = TrackingError { x: 0.2, ..Default::default() };
        assert!((kinematic_control(&e, &r, &g).0 - 1.6).abs() < 1e-15);

        let e = TrackingError { x: 0.1, theta: FRAC_PI_2, ..Default::default() };
        let (vd, wd) = kinematic_control(&e, &r, &g);
        assert!((vd - 0.3).abs() < 1e-15 && (wd - 5.3).abs() < 1e-15);
    }

    #[test]
    fn force_cases() {
        let params = PayloadParams::default();
        let g = LeaderGains::default();
        assert_eq!(leader_force_control(&TrackingError::default(), 0.0, 0.0, 0.0, 0.0, &params, &g), (0.0, 0.0));
        let e = TrackingError { x: 0.1, eta1: 0.2, ..Default::default() };
        let (fx, _) = leader_force_control(&e, 0.0, 0.0, 0.0, 0.0, &params, &g);
        assert!((fx - 0.55).abs() < 1e-15);
    }

    #[test]
    fn closed_loop_rates_match_design() {
        let params = PayloadParams::default();
        let g = LeaderGains::default();
        let e = TrackingError { x: 0.3, y: -0.2, theta: 0.4, eta1: 0.1, eta2: -0.25 };
        let (omega, vdd, wdd, ffy) = (0.7, 0.35, -0.6, 0.12);
        let (fx, fy) = leader_force_control(&e, omega, vdd, wdd, ffy, &params, &g);
        let forces = BodyForces::planar(fx, fy, 0.0, ffy, &params);
        let eta1_dot = vdd - payload_accel(&forces, omega, &params);
        let eta2_dot = wdd - payload_angular_accel(&forces, &params);
        assert!((eta1_dot + g.kv * e.eta1 + e.x).abs() < 1e-12);
        assert!((eta2_dot + g.k_omega * e.eta2 + e.theta.sin() / g.k2).abs() < 1e-12);
    }

    #[test]
    fn saturation_flags() {
        let b = ForceBounds::default();
        assert_eq!(b.apply(1.0, 1.0), ((1.0, 1.0), false));
        assert_eq!(b.apply(-3.0, 12.0), ((-2.6, 10.0), true));
    }
}
