//! Leader, follower and low-level multirotor controllers.
//!
//! Leader laws may read the reference trajectory. Follower laws take only
//! quantities the follower can estimate on board.

mod follower;
mod leader;
mod lowlevel;

pub use follower::{
    cable_offset_from_force, follower_longitudinal_control, follower_transverse_control, impedance_stiffness, lateral_offset_from_force,
    CurvatureEstimator, FollowerGains, TriggerMode, TriggerState, STRAIGHT_RADIUS,
};
pub use leader::{desired_rates, kinematic_control, leader_force_control, ForceBounds, LeaderGains};
pub use lowlevel::{
    allocate_rotors, attitude_error, desired_attitude, geometric_thrust_moment, rotor_speed, Allocation, ControlWrench, LowLevelGains,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GainError {
    #[error("gain `{0}` must be strictly positive (got {1})")]
    NotPositive(&'static str, f64),
    #[error("trigger thresholds must satisfy 0 < lower < upper (got {0}, {1})")]
    Thresholds(f64, f64),
    #[error("force bounds must satisfy min < max on each axis")]
    Bounds,
}

pub(crate) fn positive(name: &'static str, v: f64) -> Result<(), GainError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(GainError::NotPositive(name, v))
    }
}
