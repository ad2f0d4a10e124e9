//! Deterministic simulation of the two-vehicle transport system.
//!
//! A [`World`] advances one control period at a time with fixed-step RK4.
//! [`run_scenario`] wires a [`ScenarioConfig`] to a world, a CSV log and a
//! metrics summary.

pub mod config;
mod log;
mod metrics;
pub mod noise;
mod runner;
mod world;

pub use config::{
    Disturbance, Feedback, Fidelity, InitialOffset, LogSettings, MetricsSettings, PayloadModel, PlannedRoute, ScenarioConfig, SensorNoise,
    SwitchEvent, TrajectorySource, UavSpec, UkfSettings,
};
pub use log::{format_sig6, LogWriter, LOG_COLUMNS, LOG_SCHEMA};
pub use metrics::{Metrics, MetricsAccumulator, SwitchMetrics, SWITCH_BASELINE, SWITCH_RECOVERY, V2_TRANSIENT};
pub use noise::{inject_noise, inject_noise3, stream_rng, Stream};
pub use runner::{build_trajectory, run_scenario, run_to_dir, switch_spec, RunOutput};
pub use world::{
    elastic_cable_force, payload_kinetic_energy, payload_rates, pendulum_force, resolve_cable_forces, step_payload, tilt_axis,
    CableResolution, PayloadRates, Snapshot, World, FOLLOWER_OFFSET_LIMIT, TILT_BANDWIDTH,
};

use crate::estimation::EstimationError;
use crate::model::ParamError;
use crate::planning::PlanningError;

#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error("invalid scenario: {0}")]
    Config(String),
    #[error("i/o: {0}")]
    Io(String),
    #[error(transparent)]
    Param(#[from] ParamError),
    #[error(transparent)]
    Planning(#[from] PlanningError),
    #[error(transparent)]
    Estimation(#[from] EstimationError),
    #[error("estimator fault at t = {t:.3} s: {source}")]
    EstimatorFault { t: f64, source: EstimationError },
    #[error("simulation fault at t = {t:.3} s: {reason}")]
    Fault { t: f64, reason: String },
    #[error("trajectory switch rejected at t = {t:.3} s: {reason}")]
    Switch { t: f64, reason: String },
}
