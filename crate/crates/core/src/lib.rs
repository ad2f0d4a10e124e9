//! Communication-free leader-follower transport of a rigid bar by two
//! multirotors.
//!
//! The crate is split by concern:
//!
//! * [`model`]: payload and multirotor types, frames, tracking errors.
//! * [`estimation`]: unscented Kalman filtering of cable forces and endpoint positions.
//! * [`control`]: leader backstepping, follower trigger and impedance laws, geometric attitude control.
//! * [`planning`]: hybrid A* over occupancy grids and minimum-snap trajectories.
//! * [`sim`]: deterministic world simulator, scenario files, logs and metrics.

pub mod control;
pub mod estimation;
pub mod model;
pub mod planning;
pub mod sim;

pub use model::{BodyForces, PayloadParams, PayloadState, ReferenceSample, TrackingError, UavParams, UavState, GRAVITY};

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Param(#[from] model::ParamError),
    #[error(transparent)]
    Estimation(#[from] estimation::EstimationError),
    #[error(transparent)]
    Planning(#[from] planning::PlanningError),
    #[error(transparent)]
    Sim(#[from] sim::SimError),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
