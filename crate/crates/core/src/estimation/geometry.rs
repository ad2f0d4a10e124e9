use super::EstimationError;
use crate::model::{rotation_from_yaw, PayloadParams};
use nalgebra::Vector3;

/// Fraction of `m_p g` below which a force estimate is too weak to define a cable direction.
pub const FORCE_DIRECTION_FRACTION: f64 = 0.05;

/// Leader-end position from the leader's position and its estimated cable force.
///
/// `min_force` is the smallest accepted `|force|`. Below it the caller should
/// keep its previous estimate.
pub fn estimate_c1(p_leader: &Vector3<f64>, force: &Vector3<f64>, l1: f64, min_force: f64) -> Result<Vector3<f64>, EstimationError> {
    let n = force.norm();
    if !(n >= min_force && n > 0.0) {
        return Err(EstimationError::ForceDirectionUndefined(n));
    }
    Ok(p_leader - force * (l1 / n))
}

pub fn estimate_c2(p_c1: &Vector3<f64>, theta: f64, params: &PayloadParams) -> Vector3<f64> {
    p_c1 + rotation_from_yaw(theta) * params.r_p_c1() * 2.0
}

/// Body-frame longitudinal velocity, shared by both endpoints of a rigid bar.
pub fn estimate_longitudinal_velocity(v_c1: &Vector3<f64>, theta: f64) -> f64 {
    (rotation_from_yaw(theta).transpose() * v_c1).x
}
