//! Unscented filtering and the geometric reconstructions built on it.
//!
//! Each vehicle runs its own filters. The follower filter and leader filter 1
//! share [`VehicleFilter`]; leader filter 2 ([`PayloadFilter`]) estimates the
//! follower's force from the payload IMU.

mod filters;
mod geometry;
mod ukf;

pub use filters::{PayloadFilter, PayloadFilterNoise, RateDifferentiator, VehicleFilter, VehicleFilterNoise, VehicleMeasurement};
pub use geometry::{estimate_c1, estimate_c2, estimate_longitudinal_velocity, FORCE_DIRECTION_FRACTION};
pub use ukf::{ukf_predict, ukf_update, GaussianBelief, SigmaConfig};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EstimationError {
    #[error("covariance square root failed after jitter escalation")]
    SqrtFailure,
    #[error("innovation covariance is not positive definite")]
    InnovationSingular,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("time step must be positive (got {0})")]
    NonPositiveDt(f64),
    #[error("force magnitude {0} N is too small to define a cable direction")]
    ForceDirectionUndefined(f64),
    #[error("invalid sigma-point configuration: {0}")]
    InvalidSigma(&'static str),
    #[error("filter produced a non-finite state")]
    NonFinite,
}
