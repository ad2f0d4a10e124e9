use super::{positive, GainError};
use crate::model::{skew, vee, UavParams, UavState, GRAVITY};
use nalgebra::{DVector, Matrix3, Vector3, Vector4};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LowLevelGains {
    pub k_e: f64,
    pub k_omega: f64,
}

impl Default for LowLevelGains {
    fn default() -> Self {
        Self { k_e: 2.0, k_omega: 0.3 }
    }
}

impl LowLevelGains {
    pub fn validate(&self) -> Result<(), GainError> {
        positive("k_e", self.k_e)?;
        positive("k_Omega", self.k_omega)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControlWrench {
    pub thrust: f64,
    pub moment: Vector3<f64>,
}

/// Rotation whose third axis points along `thrust_dir` with heading `yaw`.
pub fn desired_attitude(thrust_dir: &Vector3<f64>, yaw: f64) -> Matrix3<f64> {
    let b3 = thrust_dir.try_normalize(1e-12).unwrap_or_else(Vector3::z);
    let c = Vector3::new(yaw.cos(), yaw.sin(), 0.0);
    let b2 = b3.cross(&c).try_normalize(1e-12).unwrap_or_else(Vector3::y);
    let b1 = b2.cross(&b3);
    Matrix3::from_columns(&[b1, b2, b3])
}

/// `e_R = (R_d^T R - R^T R_d)^vee / 2`
pub fn attitude_error(r: &Matrix3<f64>, r_d: &Matrix3<f64>) -> Vector3<f64> {
    vee(&(r_d.transpose() * r - r.transpose() * r_d)) * 0.5
}

/// Collective thrust and body moment for a vehicle that must apply `force` to its cable
/// while accelerating at `accel_ref`.
#[allow(clippy::too_many_arguments)]
pub fn geometric_thrust_moment(
    state: &UavState,
    force: &Vector3<f64>,
    accel_ref: &Vector3<f64>,
    r_d: &Matrix3<f64>,
    omega_d: &Vector3<f64>,
    omega_d_dot: &Vector3<f64>,
    g: &LowLevelGains,
    params: &UavParams,
) -> ControlWrench {
    let r = &state.attitude;
    let w = &state.angular_velocity;
    let j = &params.inertia;
    let demand = force + Vector3::new(0.0, 0.0, params.mass * GRAVITY) + accel_ref * params.mass;
    let thrust = demand.dot(&(r * Vector3::z())).max(0.0);

    let rel = r.transpose() * r_d;
    let e_r = attitude_error(r, r_d);
    let e_w = w - rel * omega_d;
    let moment = -g.k_e * e_r - g.k_omega * e_w + w.cross(&(j * w)) - j * (skew(w) * rel * omega_d - rel * omega_d_dot);
    ControlWrench { thrust, moment }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Allocation {
    pub thrusts: DVector<f64>,
    /// Set when a rotor thrust had to be clamped at zero or at `max_thrust`.
    pub clamped: bool,
}

/// Minimum-norm rotor thrusts realizing `wrench`, clamped to `[0, max_thrust]`.
pub fn allocate_rotors(wrench: &ControlWrench, params: &UavParams, max_thrust: f64) -> Allocation {
    let gam = &params.allocation;
    let w = DVector::from_column_slice(Vector4::new(wrench.thrust, wrench.moment.x, wrench.moment.y, wrench.moment.z).as_slice());
    let gram = gam * gam.transpose();
    let f = match gram.cholesky() {
        Some(c) => gam.transpose() * c.solve(&w),
        None => DVector::zeros(gam.ncols()),
    };
    let clamped_f = f.map(|x| x.clamp(0.0, max_thrust));
    let clamped = clamped_f != f;
    Allocation { thrusts: clamped_f, clamped }
}

/// Rotor speed producing thrust `f` for thrust constant `k`.
pub fn rotor_speed(f: f64, k: f64) -> f64 {
    (f.max(0.0) / k).sqrt()
}
