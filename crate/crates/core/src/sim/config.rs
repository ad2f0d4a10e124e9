//! Scenario files.
//!
//! Scenarios are TOML documents. Every section except `[trajectory]` is
//! optional and falls back to the defaults documented on each field. Paths
//! inside a scenario resolve relative to the scenario file.

use super::SimError;
use crate::control::{FollowerGains, ForceBounds, LeaderGains, LowLevelGains};
use crate::estimation::{PayloadFilterNoise, SigmaConfig, VehicleFilterNoise};
use crate::model::{PayloadParams, UavParams};
use crate::planning::{PlannerConfig, Pose, Waypoint};
use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Fidelity {
    /// Controller forces act directly on the payload.
    #[default]
    Force,
    /// Forces pass through attitude control, rotor allocation, rotor lag and elastic cables.
    Rotor,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Feedback {
    /// Controllers read ground truth continuously; the follower sits at its closed-loop equilibrium.
    #[default]
    Ideal,
    /// Controllers read filter outputs at the control rate.
    Estimated,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PayloadModel {
    /// `c2` cannot slip sideways.
    #[default]
    Nonholonomic,
    /// Free planar rigid body.
    Rigid,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UavSpec {
    pub mass: f64,
    pub inertia: [f64; 3],
    pub arm: f64,
    pub yaw_coefficient: f64,
    pub rotor_constant: f64,
    pub max_rotor_thrust: f64,
    /// Linear drag [N s/m].
    pub drag: f64,
}

impl Default for UavSpec {
    fn default() -> Self {
        Self {
            mass: 1.5,
            inertia: [0.03, 0.03, 0.05],
            arm: 0.225,
            yaw_coefficient: 0.016,
            rotor_constant: 8.54858e-6,
            max_rotor_thrust: 15.0,
            drag: 0.0,
        }
    }
}

impl UavSpec {
    pub fn params(&self) -> UavParams {
        let mut p = UavParams::quad_x(
            self.mass,
            Matrix3::from_diagonal(&Vector3::from(self.inertia)),
            self.arm,
            self.yaw_coefficient,
            self.rotor_constant,
        );
        p.drag = self.drag;
        p
    }
}

/// Sensor noise variances.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SensorNoise {
    /// UAV position [m^2].
    pub position: f64,
    /// UAV velocity [(m/s)^2].
    pub velocity: f64,
    /// UAV attitude, per rotation-vector component [rad^2].
    pub attitude: f64,
    /// Payload heading from the payload IMU [rad^2].
    pub heading: f64,
    /// Payload accelerometer [(m/s^2)^2].
    pub accel: f64,
    /// Gyroscopes [(rad/s)^2].
    pub gyro: f64,
}

/// Variances of the piecewise-constant force disturbances on each vehicle [N^2].
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Disturbance {
    pub leader: f64,
    pub follower: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UkfSettings {
    pub sigma: SigmaConfig,
    pub vehicle: VehicleFilterNoise,
    pub payload: PayloadFilterNoise,
    /// Low-pass time constant on the differentiated yaw rate, in control periods.
    pub omega_dot_tau_ticks: f64,
    /// Window of the follower's own-position curvature fit [s].
    pub curvature_window: f64,
}

impl Default for UkfSettings {
    fn default() -> Self {
        Self {
            sigma: SigmaConfig::default(),
            vehicle: VehicleFilterNoise::default(),
            payload: PayloadFilterNoise::default(),
            omega_dot_tau_ticks: 5.0,
            curvature_window: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlannedRoute {
    /// Occupancy grid file.
    pub grid: PathBuf,
    pub start: [f64; 3],
    pub goal: [f64; 3],
    #[serde(default)]
    pub settings: PlannerConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectorySource {
    /// `[x, y, t]` triples.
    #[serde(default)]
    pub waypoints: Vec<[f64; 3]>,
    pub planner: Option<PlannedRoute>,
    #[serde(default = "default_altitude")]
    pub altitude: f64,
}

fn default_altitude() -> f64 {
    1.0
}

/// Initial pose of `c2` relative to the reference start, in the reference frame.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InitialOffset {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

/// Replaces the reference mid-run. Waypoint times are relative to `time`;
/// the new trajectory starts from the current reference state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SwitchEvent {
    pub time: f64,
    pub waypoints: Vec<[f64; 3]>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LogSettings {
    /// Keep every n-th control-tick record.
    pub every: usize,
    /// Record every integration step instead of every control tick.
    pub substeps: bool,
}

impl Default for LogSettings {
    fn default() -> Self {
        Self { every: 1, substeps: false }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricsSettings {
    /// Samples before this time are excluded from the error statistics [s].
    pub start: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    #[serde(default)]
    pub mode: Fidelity,
    #[serde(default)]
    pub feedback: Feedback,
    /// Defaults to nonholonomic with ideal feedback and rigid with estimated feedback,
    /// where the follower has to keep `c2` from slipping.
    #[serde(default)]
    pub payload_model: Option<PayloadModel>,
    /// Integration step [s].
    #[serde(default = "default_dt")]
    pub dt: f64,
    /// Control and estimation rate [Hz].
    #[serde(default = "default_control_rate")]
    pub control_rate: f64,
    pub duration: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub payload: PayloadParams,
    #[serde(default)]
    pub leader_uav: UavSpec,
    #[serde(default)]
    pub follower_uav: UavSpec,
    #[serde(default)]
    pub leader_gains: LeaderGains,
    #[serde(default)]
    pub follower_gains: FollowerGains,
    #[serde(default)]
    pub lowlevel_gains: LowLevelGains,
    #[serde(default)]
    pub force_bounds: ForceBounds,
    #[serde(default)]
    pub ukf: UkfSettings,
    #[serde(default)]
    pub sensors: SensorNoise,
    #[serde(default)]
    pub disturbance: Disturbance,
    pub trajectory: TrajectorySource,
    #[serde(default)]
    pub initial: InitialOffset,
    pub switch: Option<SwitchEvent>,
    #[serde(default)]
    pub log: LogSettings,
    #[serde(default)]
    pub metrics: MetricsSettings,
    /// Cable stiffness and damping for rotor-level runs.
    #[serde(default = "default_cable_stiffness")]
    pub cable_stiffness: f64,
    #[serde(default = "default_cable_damping")]
    pub cable_damping: f64,
    /// First-order rotor time constant [s].
    #[serde(default = "default_rotor_tau")]
    pub rotor_tau: f64,
    /// Directory used to resolve relative paths; set by [`ScenarioConfig::load`].
    #[serde(skip)]
    pub base_dir: Option<PathBuf>,
}

fn default_dt() -> f64 {
    1e-3
}
fn default_control_rate() -> f64 {
    100.0
}
fn default_cable_stiffness() -> f64 {
    2e3
}
fn default_cable_damping() -> f64 {
    40.0
}
fn default_rotor_tau() -> f64 {
    0.02
}

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), SimError> {
    if cond {
        Ok(())
    } else {
        Err(SimError::Config(msg.into()))
    }
}

impl ScenarioConfig {
    pub fn parse(text: &str) -> Result<Self, SimError> {
        toml::from_str(text).map_err(|e| SimError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, SimError> {
        let text = std::fs::read_to_string(path).map_err(|e| SimError::Io(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::parse(&text)?;
        cfg.base_dir = path.parent().map(Path::to_path_buf);
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }

    /// Integration steps per control period.
    pub fn substeps(&self) -> usize {
        (1.0 / (self.control_rate * self.dt)).round().max(1.0) as usize
    }

    pub fn control_dt(&self) -> f64 {
        self.dt * self.substeps() as f64
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        match &self.base_dir {
            Some(base) if p.is_relative() => base.join(p),
            _ => p.to_path_buf(),
        }
    }

    pub fn payload_model(&self) -> PayloadModel {
        self.payload_model.unwrap_or(match self.feedback {
            Feedback::Ideal => PayloadModel::Nonholonomic,
            Feedback::Estimated => PayloadModel::Rigid,
        })
    }

    pub fn validate(&self) -> Result<(), SimError> {
        ensure(self.dt > 0.0 && self.dt <= 0.02, format!("dt must lie in (0, 0.02], got {}", self.dt))?;
        ensure(self.control_rate > 0.0 && 1.0 / self.control_rate >= self.dt, "control period must be at least dt")?;
        let ratio = 1.0 / (self.control_rate * self.dt);
        ensure((ratio - ratio.round()).abs() < 1e-6, "control period must be a whole number of integration steps")?;
        ensure(self.duration >= 0.0 && self.duration.is_finite(), "duration must be finite and non-negative")?;
        self.payload.validate()?;
        self.leader_uav.params().validate()?;
        self.follower_uav.params().validate()?;
        self.leader_gains.validate().map_err(|e| SimError::Config(e.to_string()))?;
        self.follower_gains.validate().map_err(|e| SimError::Config(e.to_string()))?;
        self.lowlevel_gains.validate().map_err(|e| SimError::Config(e.to_string()))?;
        self.force_bounds.validate().map_err(|e| SimError::Config(e.to_string()))?;
        self.ukf.sigma.validate(15)?;
        let s = &self.sensors;
        for (name, v) in [
            ("sensors.position", s.position),
            ("sensors.velocity", s.velocity),
            ("sensors.attitude", s.attitude),
            ("sensors.heading", s.heading),
            ("sensors.accel", s.accel),
            ("sensors.gyro", s.gyro),
            ("disturbance.leader", self.disturbance.leader),
            ("disturbance.follower", self.disturbance.follower),
        ] {
            ensure(v >= 0.0 && v.is_finite(), format!("{name} must be a non-negative variance"))?;
        }
        ensure(self.cable_stiffness > 0.0 && self.cable_damping >= 0.0, "cable stiffness must be positive")?;
        ensure(self.rotor_tau > 0.0, "rotor_tau must be positive")?;
        ensure(self.log.every >= 1, "log.every must be at least 1")?;
        let t = &self.trajectory;
        ensure(t.waypoints.is_empty() != t.planner.is_none(), "trajectory needs exactly one of `waypoints` or `planner`")?;
        if let Some(sw) = &self.switch {
            ensure(sw.time >= 0.0 && !sw.waypoints.is_empty(), "switch needs a time and at least one waypoint")?;
        }
        Ok(())
    }

    /// Waypoints of the main trajectory, running the planner when configured.
    pub fn waypoints(&self) -> Result<Vec<Waypoint>, SimError> {
        let t = &self.trajectory;
        if let Some(route) = &t.planner {
            let path = self.resolve(&route.grid);
            let text = std::fs::read_to_string(&path).map_err(|e| SimError::Io(format!("{}: {e}", path.display())))?;
            let grid = crate::planning::OccupancyGrid::parse(&text)?;
            let [sx, sy, st] = route.start;
            let [gx, gy, gt] = route.goal;
            return Ok(crate::planning::plan_waypoints(&grid, Pose::new(sx, sy, st), Pose::new(gx, gy, gt), &route.settings)?);
        }
        Ok(t.waypoints.iter().map(|w| Waypoint::new(w[0], w[1], w[2])).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
name = "line"
duration = 5.0
[trajectory]
waypoints = [[0.0, 0.0, 0.0], [2.0, 0.0, 5.0]]
"#;

    #[test]
    fn minimal_scenario_uses_defaults() {
        let cfg = ScenarioConfig::parse(MINIMAL).unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.substeps(), 10);
        assert_eq!(cfg.payload, PayloadParams::default());
        assert_eq!(cfg.waypoints().unwrap().len(), 2);
    }

    #[test]
    fn unknown_key_rejected() {
        let text = format!("{MINIMAL}\n[payload]\nmas = 1.0\n");
        assert!(matches!(ScenarioConfig::parse(&text), Err(SimError::Config(_))));
    }

    #[test]
    fn bad_dt_rejected() {
        let mut cfg = ScenarioConfig::parse(MINIMAL).unwrap();
        cfg.dt = 0.05;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn round_trips_through_toml() {
        let cfg = ScenarioConfig::parse(MINIMAL).unwrap();
        let back = ScenarioConfig::parse(&cfg.to_toml()).unwrap();
        assert_eq!(cfg, back);
    }
}
