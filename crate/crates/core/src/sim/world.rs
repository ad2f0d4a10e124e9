//! Plant dynamics and the per-tick control pipeline.
//!
//! Force-level worlds apply the controllers' cable forces directly to the
//! bar; the vehicles hang off it kinematically so the cable lengths are exact.
//! Rotor-level worlds fly two rigid-body multirotors through elastic cables.

use super::config::{Feedback, Fidelity, PayloadModel, ScenarioConfig};
use super::noise::{inject_noise, inject_noise3, stream_rng, Stream};
use super::SimError;
use crate::control::{
    allocate_rotors, cable_offset_from_force, desired_attitude, desired_rates, follower_longitudinal_control, follower_transverse_control,
    geometric_thrust_moment, kinematic_control, leader_force_control, CurvatureEstimator, TriggerMode, TriggerState,
};
use crate::estimation::{
    estimate_c1, estimate_c2, estimate_longitudinal_velocity, PayloadFilter, RateDifferentiator, VehicleFilter, VehicleMeasurement,
    FORCE_DIRECTION_FRACTION,
};
use crate::model::{
    lyapunov_v2, payload_accel, payload_angular_accel, payload_endpoints, rotation_from_yaw, tracking_error, BodyForces, PayloadParams,
    PayloadState, ReferenceSample, TrackingError, UavParams, UavState, GRAVITY,
};
use crate::planning::TrajectorySpec;
use nalgebra::{DVector, Matrix3, Quaternion, Rotation3, UnitQuaternion, Vector2, Vector3};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

/// Natural frequency of the cable-tilt lag of kinematically slaved vehicles [rad/s].
pub const TILT_BANDWIDTH: f64 = 50.0;

/// Largest horizontal offset of the follower from `c2`, as a fraction of `l2`.
pub const FOLLOWER_OFFSET_LIMIT: f64 = 0.95;

/// Below this speed the follower keeps its last heading estimate [m/s].
const HEADING_MIN_SPEED: f64 = 0.05;

const PAYLOAD_DIM: usize = 6;
const UAV_BASE_DIM: usize = 13;

fn e3() -> Vector3<f64> {
    Vector3::z()
}

fn horizontal(v: &Vector3<f64>) -> Vector3<f64> {
    Vector3::new(v.x, v.y, 0.0)
}

/// Time derivative of a [`PayloadState`].
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PayloadRates {
    pub position: Vector3<f64>,
    pub theta: f64,
    pub v: f64,
    pub v_lat: f64,
    pub omega: f64,
}

/// Payload dynamics under body-frame cable forces.
pub fn payload_rates(state: &PayloadState, forces: &BodyForces, params: &PayloadParams, model: PayloadModel) -> PayloadRates {
    let omega_dot = payload_angular_accel(forces, params);
    match model {
        PayloadModel::Nonholonomic => {
            let s = PayloadState { v_lat: 0.0, ..*state };
            PayloadRates {
                position: s.cog_velocity(params),
                theta: state.omega,
                v: payload_accel(forces, state.omega, params),
                v_lat: 0.0,
                omega: omega_dot,
            }
        }
        PayloadModel::Rigid => {
            let fy = forces.leader.y + forces.follower.y;
            PayloadRates {
                position: state.cog_velocity(params),
                theta: state.omega,
                v: payload_accel(forces, state.omega, params) + state.omega * state.v_lat,
                v_lat: fy / params.mass - state.omega * state.v - omega_dot * params.length / 2.0,
                omega: omega_dot,
            }
        }
    }
}

/// Translational plus rotational kinetic energy of the bar.
pub fn payload_kinetic_energy(state: &PayloadState, params: &PayloadParams) -> f64 {
    0.5 * params.mass * state.cog_velocity(params).norm_squared() + 0.5 * params.izz * state.omega * state.omega
}

fn payload_to_slice(s: &PayloadState, out: &mut [f64]) {
    out[..PAYLOAD_DIM].copy_from_slice(&[s.position.x, s.position.y, s.theta, s.v, s.v_lat, s.omega]);
}

fn payload_from_slice(x: &[f64], z: f64) -> PayloadState {
    PayloadState { position: Vector3::new(x[0], x[1], z), theta: x[2], v: x[3], v_lat: x[4], omega: x[5] }
}

fn rates_to_slice(r: &PayloadRates, out: &mut [f64]) {
    out[..PAYLOAD_DIM].copy_from_slice(&[r.position.x, r.position.y, r.theta, r.v, r.v_lat, r.omega]);
}

fn rk4<F: Fn(f64, &[f64]) -> Vec<f64>>(x: &[f64], t: f64, h: f64, f: F) -> Vec<f64> {
    let axpy = |a: &[f64], k: &[f64], s: f64| a.iter().zip(k).map(|(a, k)| a + s * k).collect::<Vec<_>>();
    let k1 = f(t, x);
    let k2 = f(t + 0.5 * h, &axpy(x, &k1, 0.5 * h));
    let k3 = f(t + 0.5 * h, &axpy(x, &k2, 0.5 * h));
    let k4 = f(t + h, &axpy(x, &k3, h));
    x.iter().enumerate().map(|(i, xi)| xi + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])).collect()
}

/// One RK4 step of the bar alone under constant body-frame forces.
pub fn step_payload(state: &PayloadState, forces: &BodyForces, params: &PayloadParams, model: PayloadModel, dt: f64) -> PayloadState {
    let z = state.position.z;
    let mut x = [0.0; PAYLOAD_DIM];
    payload_to_slice(state, &mut x);
    let next = rk4(&x, 0.0, dt, |_, x| {
        let mut out = vec![0.0; PAYLOAD_DIM];
        rates_to_slice(&payload_rates(&payload_from_slice(x, z), forces, params, model), &mut out);
        out
    });
    payload_from_slice(&next, z)
}

/// Cable axis (unit, pointing up toward the vehicle) for horizontal-over-vertical tilt ratios `s`.
pub fn tilt_axis(s: &Vector2<f64>) -> Vector3<f64> {
    Vector3::new(s.x, s.y, 1.0).normalize()
}

fn tilt_axis_rate(s: &Vector2<f64>, sd: &Vector2<f64>) -> Vector3<f64> {
    let w = 1.0 / (1.0 + s.norm_squared()).sqrt();
    Vector3::new(sd.x, sd.y, 0.0) * w - Vector3::new(s.x, s.y, 1.0) * (w * w * w * s.dot(sd))
}

/// Cable forces actually transmitted to the payload in force-level mode.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct CableResolution {
    pub leader: Vector3<f64>,
    pub follower: Vector3<f64>,
    pub leader_slack: bool,
    pub follower_slack: bool,
}

fn tension_only(cmd: &Vector3<f64>, axis: &Vector3<f64>) -> (Vector3<f64>, bool) {
    if cmd.dot(axis) < 0.0 {
        (Vector3::zeros(), true)
    } else {
        (*cmd, false)
    }
}

/// Passes commanded cable forces through when they pull along the cable axis
/// and zeroes (flagging slack) any that would push.
///
/// Axes point from the payload attachment toward the vehicle.
pub fn resolve_cable_forces(
    leader_cmd: &Vector3<f64>,
    leader_axis: &Vector3<f64>,
    follower_cmd: &Vector3<f64>,
    follower_axis: &Vector3<f64>,
) -> CableResolution {
    let (leader, leader_slack) = tension_only(leader_cmd, leader_axis);
    let (follower, follower_slack) = tension_only(follower_cmd, follower_axis);
    CableResolution { leader, follower, leader_slack, follower_slack }
}

/// Unilateral spring-damper cable. Returns the force on the payload end and a slack flag.
pub fn elastic_cable_force(
    attach: &Vector3<f64>,
    attach_velocity: &Vector3<f64>,
    vehicle: &Vector3<f64>,
    vehicle_velocity: &Vector3<f64>,
    length: f64,
    stiffness: f64,
    damping: f64,
) -> (Vector3<f64>, bool) {
    let d = vehicle - attach;
    let dist = d.norm();
    if dist <= length || dist == 0.0 {
        return (Vector3::zeros(), true);
    }
    let n = d / dist;
    let tension = stiffness * (dist - length) + damping * n.dot(&(vehicle_velocity - attach_velocity));
    if tension <= 0.0 {
        return (Vector3::zeros(), true);
    }
    (n * tension, false)
}

/// Force on the payload from a taut cable of length `length` whose top end is
/// `offset` away horizontally, carrying `vertical` of the payload weight.
///
/// Offsets beyond [`FOLLOWER_OFFSET_LIMIT`] are clamped; the flag reports it.
pub fn pendulum_force(offset: &Vector2<f64>, length: f64, vertical: f64) -> (Vector3<f64>, bool) {
    let (o, clamped) = clamp_offset(offset, length);
    let h = (length * length - o.norm_squared()).sqrt();
    (Vector3::new(o.x * vertical / h, o.y * vertical / h, vertical), clamped)
}

fn clamp_offset(offset: &Vector2<f64>, length: f64) -> (Vector2<f64>, bool) {
    let lim = FOLLOWER_OFFSET_LIMIT * length;
    let n = offset.norm();
    if n > lim {
        (offset * (lim / n), true)
    } else {
        (*offset, false)
    }
}

/// Everything logged about one integration step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Snapshot {
    pub t: f64,
    /// Set on the first step after a control update.
    pub control_tick: bool,
    pub generation: u64,
    pub reference: ReferenceSample,
    pub payload: PayloadState,
    pub p_c1: Vector3<f64>,
    pub p_c2: Vector3<f64>,
    /// True tracking error, with `eta` from the true `v` and `omega`.
    pub error: TrackingError,
    pub v2: f64,
    /// Cable forces acting on the payload, payload frame.
    pub forces: BodyForces,
    /// Commanded cable forces, payload frame.
    pub leader_command: Vector3<f64>,
    pub follower_command: Vector3<f64>,
    /// Leader's estimate of its own cable force, payload frame.
    pub leader_force_estimate: Vector3<f64>,
    /// Follower force seen by the leader's payload filter, payload frame.
    pub leader_estimate: Vector3<f64>,
    /// Follower force seen by the follower's own filter, payload frame.
    pub follower_estimate: Vector3<f64>,
    pub p_c1_estimate: Vector3<f64>,
    pub v_estimate: f64,
    pub trigger: TriggerState,
    pub saturated: bool,
    pub leader_slack: bool,
    pub follower_slack: bool,
    pub leader_position: Vector3<f64>,
    pub follower_position: Vector3<f64>,
    /// Largest cable length error [m].
    pub cable_error: f64,
    /// `| |p_c1 - p_c2| - L |` [m].
    pub bar_error: f64,
    /// Body-frame lateral velocity of `c2`.
    pub lateral_velocity: f64,
    /// Set when the follower's cable offset hit [`FOLLOWER_OFFSET_LIMIT`].
    pub offset_clamped: bool,
    /// Worst rotation-matrix defect of the two vehicles (rotor-level only).
    pub attitude_defect: f64,
}

#[derive(Debug, Clone, Copy, Default)]
struct Held {
    /// Commanded leader cable force, inertial.
    leader: Vector3<f64>,
    /// Follower cable force (rotor-level) or horizontal thrust (force-level), inertial.
    follower: Vector3<f64>,
    leader_dist: Vector3<f64>,
    follower_dist: Vector3<f64>,
    /// Reference acceleration fed forward to the leader's attitude loop.
    leader_accel: Vector3<f64>,
    leader_yaw: f64,
    follower_yaw: f64,
    saturated: bool,
}

#[derive(Debug, Clone, Copy, Default)]
struct Eval {
    payload: PayloadState,
    leader_force: Vector3<f64>,
    follower_force: Vector3<f64>,
    leader_command: Vector3<f64>,
    follower_command: Vector3<f64>,
    /// Force each vehicle's own filter should attribute to its cable.
    leader_load: Vector3<f64>,
    follower_load: Vector3<f64>,
    leader_tilt_target: Vector2<f64>,
    follower_tilt_target: Vector2<f64>,
    leader_slack: bool,
    follower_slack: bool,
    saturated: bool,
    offset_clamped: bool,
    leader_position: Vector3<f64>,
    leader_velocity: Vector3<f64>,
    follower_position: Vector3<f64>,
    follower_velocity: Vector3<f64>,
}

struct IdealForces {
    leader: (f64, f64),
    follower: (f64, f64),
    saturated: bool,
}

#[derive(Debug, Clone, Copy)]
struct UavBlock {
    offset: usize,
    rotors: usize,
}

impl UavBlock {
    fn len(&self) -> usize {
        UAV_BASE_DIM + self.rotors
    }

    fn quaternion(&self, x: &[f64]) -> UnitQuaternion<f64> {
        let o = self.offset + 6;
        UnitQuaternion::from_quaternion(Quaternion::new(x[o], x[o + 1], x[o + 2], x[o + 3]))
    }

    fn state(&self, x: &[f64]) -> UavState {
        let o = self.offset;
        UavState {
            position: Vector3::new(x[o], x[o + 1], x[o + 2]),
            velocity: Vector3::new(x[o + 3], x[o + 4], x[o + 5]),
            attitude: self.quaternion(x).to_rotation_matrix().into_inner(),
            angular_velocity: Vector3::new(x[o + 10], x[o + 11], x[o + 12]),
        }
    }

    fn thrusts(&self, x: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(&x[self.offset + UAV_BASE_DIM..self.offset + self.len()])
    }

    fn write(&self, x: &mut [f64], p: &Vector3<f64>, q: &UnitQuaternion<f64>, thrust_each: f64) {
        let o = self.offset;
        x[o..o + 3].copy_from_slice(p.as_slice());
        x[o + 3..o + 6].fill(0.0);
        let q = q.quaternion();
        x[o + 6..o + 10].copy_from_slice(&[q.w, q.i, q.j, q.k]);
        x[o + 10..o + 13].fill(0.0);
        x[o + UAV_BASE_DIM..o + self.len()].fill(thrust_each);
    }

    fn normalize(&self, x: &mut [f64]) {
        let o = self.offset + 6;
        let n = (x[o] * x[o] + x[o + 1] * x[o + 1] + x[o + 2] * x[o + 2] + x[o + 3] * x[o + 3]).sqrt();
        for v in &mut x[o..o + 4] {
            *v /= n;
        }
    }
}

struct Estimators {
    leader: VehicleFilter,
    payload: PayloadFilter,
    follower: VehicleFilter,
    omega_dot: RateDifferentiator,
    curvature: CurvatureEstimator,
    p_c1: Vector3<f64>,
    /// Follower heading estimate.
    heading: f64,
    radius: f64,
    previous_offset: Option<Vector2<f64>>,
    hold_point: Vector2<f64>,
    leader_attitude: UnitQuaternion<f64>,
    follower_attitude: UnitQuaternion<f64>,
    leader_velocity: Vector3<f64>,
    follower_velocity: Vector3<f64>,
    /// Measured payload heading and yaw rate at the last tick.
    theta: f64,
    omega: f64,
    v_hat: f64,
}

struct Rngs {
    leader_disturbance: ChaCha8Rng,
    follower_disturbance: ChaCha8Rng,
    leader_sensors: ChaCha8Rng,
    follower_sensors: ChaCha8Rng,
    imu: ChaCha8Rng,
}

/// Full simulation state.
pub struct World {
    cfg: ScenarioConfig,
    params: PayloadParams,
    leader_params: UavParams,
    follower_params: UavParams,
    spec: TrajectorySpec,
    generation: u64,
    heading: f64,
    altitude: f64,
    x: Vec<f64>,
    step: u64,
    substeps: usize,
    held: Held,
    leader_rotor_cmd: DVector<f64>,
    follower_rotor_cmd: DVector<f64>,
    rotor_clamped: bool,
    leader_block: UavBlock,
    follower_block: UavBlock,
    trigger: TriggerState,
    est: Estimators,
    rngs: Rngs,
    leader_load_avg: Vector3<f64>,
    follower_load_avg: Vector3<f64>,
}

impl World {
    /// Builds a world with `c2` placed at the reference start plus the configured offset.
    pub fn new(cfg: &ScenarioConfig, spec: TrajectorySpec) -> Result<Self, SimError> {
        cfg.validate()?;
        let params = cfg.payload;
        let leader_params = cfg.leader_uav.params();
        let follower_params = cfg.follower_uav.params();
        let altitude = cfg.trajectory.altitude;
        let t0 = spec.start_time();
        let reference = spec.sample(t0, 0.0);
        let rr = rotation_from_yaw(reference.theta);
        let off = &cfg.initial;
        let p_c2 = reference.position + rr * Vector3::new(off.x, off.y, 0.0);
        let payload = PayloadState::from_c2(Vector3::new(p_c2.x, p_c2.y, altitude), reference.theta + off.theta, &params);

        let leader_block = UavBlock { offset: PAYLOAD_DIM, rotors: leader_params.rotor_count() };
        let follower_block = UavBlock { offset: PAYLOAD_DIM + leader_block.len(), rotors: follower_params.rotor_count() };
        let dim = match cfg.mode {
            Fidelity::Force => PAYLOAD_DIM + 8,
            Fidelity::Rotor => follower_block.offset + follower_block.len(),
        };
        let mut x = vec![0.0; dim];
        payload_to_slice(&payload, &mut x);
        let hw = params.half_weight();
        let (p_c1, p_c2) = payload_endpoints(&payload, &params);
        if cfg.mode == Fidelity::Force && cfg.feedback == Feedback::Estimated {
            x[PAYLOAD_DIM + 4] = p_c2.x;
            x[PAYLOAD_DIM + 5] = p_c2.y;
        }
        let yaw = UnitQuaternion::from_axis_angle(&Vector3::z_axis(), payload.theta);
        if cfg.mode == Fidelity::Rotor {
            let sl = hw / cfg.cable_stiffness;
            let nl = leader_block.rotors as f64;
            let nf = follower_block.rotors as f64;
            leader_block.write(&mut x, &(p_c1 + e3() * (params.leader_cable + sl)), &yaw, (leader_params.mass * GRAVITY + hw) / nl);
            follower_block.write(&mut x, &(p_c2 + e3() * (params.follower_cable + sl)), &yaw, (follower_params.mass * GRAVITY + hw) / nf);
        }
        let leader_rotor_cmd = DVector::from_element(leader_block.rotors, (leader_params.mass * GRAVITY + hw) / leader_block.rotors as f64);
        let follower_rotor_cmd =
            DVector::from_element(follower_block.rotors, (follower_params.mass * GRAVITY + hw) / follower_block.rotors as f64);

        let leader_pos = p_c1 + e3() * params.leader_cable;
        let follower_pos = p_c2 + e3() * params.follower_cable;
        let up = Vector3::new(0.0, 0.0, hw);
        let meas = |p: Vector3<f64>| VehicleMeasurement {
            position: p,
            velocity: Vector3::zeros(),
            attitude: yaw,
            angular_velocity: Vector3::zeros(),
        };
        let u = &cfg.ukf;
        let est = Estimators {
            leader: VehicleFilter::new(leader_params.mass, &meas(leader_pos), up, &u.vehicle, u.sigma)?,
            payload: PayloadFilter::new(params, p_c1, up, &u.payload, u.sigma)?,
            follower: VehicleFilter::new(follower_params.mass, &meas(follower_pos), up, &u.vehicle, u.sigma)?,
            omega_dot: RateDifferentiator::new(u.omega_dot_tau_ticks / cfg.control_rate),
            curvature: CurvatureEstimator::new(u.curvature_window),
            p_c1,
            heading: payload.theta,
            radius: f64::INFINITY,
            previous_offset: None,
            hold_point: follower_pos.xy(),
            leader_attitude: yaw,
            follower_attitude: yaw,
            leader_velocity: Vector3::zeros(),
            follower_velocity: Vector3::zeros(),
            theta: payload.theta,
            omega: 0.0,
            v_hat: 0.0,
        };
        let seed = cfg.seed;
        let rngs = Rngs {
            leader_disturbance: stream_rng(seed, Stream::LeaderDisturbance),
            follower_disturbance: stream_rng(seed, Stream::FollowerDisturbance),
            leader_sensors: stream_rng(seed, Stream::LeaderSensors),
            follower_sensors: stream_rng(seed, Stream::FollowerSensors),
            imu: stream_rng(seed, Stream::PayloadImu),
        };
        let held = Held {
            leader: up,
            follower: match (cfg.mode, cfg.feedback) {
                (Fidelity::Force, Feedback::Estimated) => Vector3::zeros(),
                _ => up,
            },
            leader_yaw: payload.theta,
            follower_yaw: payload.theta,
            ..Default::default()
        };
        Ok(Self {
            cfg: cfg.clone(),
            params,
            leader_params,
            follower_params,
            heading: reference.theta,
            spec,
            generation: 0,
            altitude,
            x,
            step: 0,
            substeps: cfg.substeps(),
            held,
            leader_rotor_cmd,
            follower_rotor_cmd,
            rotor_clamped: false,
            leader_block,
            follower_block,
            trigger: TriggerState::new(0.0),
            est,
            rngs,
            leader_load_avg: up,
            follower_load_avg: up,
        })
    }

    pub fn time(&self) -> f64 {
        self.spec_time_origin() + self.step as f64 * self.cfg.dt
    }

    fn spec_time_origin(&self) -> f64 {
        0.0
    }

    pub fn control_dt(&self) -> f64 {
        self.cfg.dt * self.substeps as f64
    }

    pub fn payload(&self) -> PayloadState {
        payload_from_slice(&self.x, self.altitude)
    }

    pub fn trajectory(&self) -> &TrajectorySpec {
        &self.spec
    }

    pub fn generation(&self) -> u64 {
        self.generation
    }

    pub fn trigger(&self) -> TriggerState {
        self.trigger
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.cfg
    }

    /// Reference the leader tracks at time `t`.
    pub fn reference_at(&self, t: f64) -> ReferenceSample {
        self.spec.sample(t, self.heading)
    }

    /// Replaces the leader's trajectory. The new trajectory must cover the
    /// current time and agree with the old reference position to 0.1 m.
    pub fn switch_trajectory(&mut self, spec: TrajectorySpec) -> Result<(), SimError> {
        let t = self.time();
        let reject = |reason: String| SimError::Switch { t, reason };
        if t < spec.start_time() - 1e-9 || t > spec.end_time() {
            return Err(reject(format!(
                "new trajectory covers [{:.3}, {:.3}] s, which excludes the switch time",
                spec.start_time(),
                spec.end_time()
            )));
        }
        let old = self.spec.sample(t, self.heading).position;
        let new = spec.sample(t, self.heading).position;
        let gap = (new - old).norm();
        if gap > 0.1 {
            return Err(reject(format!("reference would jump by {gap:.3} m (limit 0.1 m)")));
        }
        self.spec = spec;
        self.generation += 1;
        Ok(())
    }

    /// Snapshot of the current state without advancing.
    pub fn snapshot(&self) -> Snapshot {
        let t = self.time();
        let e = self.eval(t, &self.x);
        self.make_snapshot(t, &e, false)
    }

    /// One control period: sense, estimate, decide, then integrate `substeps` RK4 steps.
    /// `observer` sees every integration step.
    pub fn advance(&mut self, observer: &mut dyn FnMut(&Snapshot)) -> Result<(), SimError> {
        let t0 = self.time();
        self.control(t0)?;
        let dt = self.cfg.dt;
        let e = self.eval(t0, &self.x);
        let (mut prev_l, mut prev_f) = (e.leader_load, e.follower_load);
        let (mut sum_l, mut sum_f) = (Vector3::zeros(), Vector3::zeros());
        for i in 0..self.substeps {
            let t = self.time();
            if self.cfg.mode == Fidelity::Rotor {
                self.low_level();
            }
            let next = rk4(&self.x, t, dt, |t, x| self.rates(t, x));
            self.x = next;
            self.step += 1;
            if self.cfg.mode == Fidelity::Rotor {
                self.leader_block.normalize(&mut self.x);
                self.follower_block.normalize(&mut self.x);
            }
            let t = self.time();
            if let Some(bad) = self.x.iter().position(|v| !v.is_finite()) {
                return Err(SimError::Fault { t, reason: format!("state component {bad} is not finite") });
            }
            let e = self.eval(t, &self.x);
            sum_l += (prev_l + e.leader_load) * 0.5;
            sum_f += (prev_f + e.follower_load) * 0.5;
            prev_l = e.leader_load;
            prev_f = e.follower_load;
            let snap = self.make_snapshot(t, &e, i == 0);
            observer(&snap);
        }
        let n = self.substeps as f64;
        self.leader_load_avg = sum_l / n;
        self.follower_load_avg = sum_f / n;
        Ok(())
    }

    fn make_snapshot(&self, t: f64, e: &Eval, control_tick: bool) -> Snapshot {
        let p = &self.params;
        let lg = &self.cfg.leader_gains;
        let pay = e.payload;
        let reference = self.spec.sample(t, self.heading);
        let (p_c1, p_c2) = payload_endpoints(&pay, p);
        let mut error = tracking_error(&reference, &p_c2, pay.theta);
        let (v_d, omega_d) = kinematic_control(&error, &reference, lg);
        error.eta1 = v_d - pay.v;
        error.eta2 = omega_d - pay.omega;
        let rt = rotation_from_yaw(pay.theta).transpose();
        let cable_error =
            ((e.leader_position - p_c1).norm() - p.leader_cable).abs().max(((e.follower_position - p_c2).norm() - p.follower_cable).abs());
        let attitude_defect = if self.cfg.mode == Fidelity::Rotor {
            self.leader_block.state(&self.x).attitude_defect().max(self.follower_block.state(&self.x).attitude_defect())
        } else {
            0.0
        };
        Snapshot {
            t,
            control_tick,
            generation: self.generation,
            reference,
            payload: pay,
            p_c1,
            p_c2,
            error,
            v2: lyapunov_v2(&error, lg.k2),
            forces: BodyForces { leader: rt * e.leader_force, follower: rt * e.follower_force },
            leader_command: rt * e.leader_command,
            follower_command: rt * e.follower_command,
            leader_force_estimate: rt * self.est.leader.force(),
            leader_estimate: rt * self.est.payload.follower_force(),
            follower_estimate: rt * self.est.follower.force(),
            p_c1_estimate: self.est.p_c1,
            v_estimate: self.est.v_hat,
            trigger: self.trigger,
            saturated: e.saturated,
            leader_slack: e.leader_slack,
            follower_slack: e.follower_slack,
            leader_position: e.leader_position,
            follower_position: e.follower_position,
            cable_error,
            bar_error: ((p_c1 - p_c2).norm() - p.length).abs(),
            lateral_velocity: if self.cfg.payload_model() == PayloadModel::Rigid { pay.v_lat } else { 0.0 },
            offset_clamped: e.offset_clamped,
            attitude_defect,
        }
    }

    /// Leader and follower forces from ground truth, payload frame.
    ///
    /// The follower is idealized: it applies no longitudinal force and exactly
    /// the transverse force that keeps `c2` from slipping sideways.
    fn ideal_forces(&self, t: f64, pay: &PayloadState) -> IdealForces {
        let p = &self.params;
        let lg = &self.cfg.leader_gains;
        let reference = self.spec.sample(t, self.heading);
        let (_, p_c2) = payload_endpoints(pay, p);
        let mut err = tracking_error(&reference, &p_c2, pay.theta);
        let (v_d, omega_d) = kinematic_control(&err, &reference, lg);
        err.eta1 = v_d - pay.v;
        err.eta2 = omega_d - pay.omega;
        let (v_d_dot, omega_d_dot) = desired_rates(&err, pay.v, pay.omega, &reference, lg);
        let yaw_accel = omega_d_dot + lg.k_omega * err.eta2 + err.theta.sin() / lg.k2;
        let lever = 2.0 * p.izz / p.length;
        let follower_y = 0.5 * (p.mass * (pay.omega * pay.v + yaw_accel * p.length / 2.0) - lever * yaw_accel);
        let (lx, ly) = leader_force_control(&err, pay.omega, v_d_dot, omega_d_dot, follower_y, p, lg);
        let ((lx, ly), saturated) = self.cfg.force_bounds.apply(lx, ly);
        IdealForces { leader: (lx, ly), follower: (0.0, follower_y), saturated }
    }

    fn eval(&self, t: f64, x: &[f64]) -> Eval {
        let p = &self.params;
        let hw = p.half_weight();
        let pay = payload_from_slice(x, self.altitude);
        let r = rotation_from_yaw(pay.theta);
        let (p_c1, p_c2) = payload_endpoints(&pay, p);
        let v_c1 = pay.point_velocity(&p.r_c1_p(), p);
        let v_c2 = pay.point_velocity(&p.r_c2_p(), p);
        let h = &self.held;
        let mut e = Eval { payload: pay, saturated: h.saturated, ..Default::default() };
        match self.cfg.mode {
            Fidelity::Force => {
                let (leader_cmd, follower_cmd) = if self.cfg.feedback == Feedback::Ideal {
                    let f = self.ideal_forces(t, &pay);
                    e.saturated = f.saturated;
                    (r * Vector3::new(f.leader.0, f.leader.1, hw), r * Vector3::new(f.follower.0, f.follower.1, hw))
                } else {
                    (h.leader, h.follower)
                };
                e.leader_command = leader_cmd;
                e.follower_command = follower_cmd;

                let o = PAYLOAD_DIM;
                let s = Vector2::new(x[o], x[o + 1]);
                let sd = Vector2::new(x[o + 2], x[o + 3]);
                let axis = tilt_axis(&s);
                let applied = leader_cmd + h.leader_dist;
                let (force, slack) = tension_only(&applied, &axis);
                e.leader_force = force;
                e.leader_slack = slack;
                e.leader_load = force - h.leader_dist;
                e.leader_tilt_target = Vector2::new(applied.x, applied.y) / applied.z.max(1e-9);
                e.leader_position = p_c1 + axis * p.leader_cable;
                e.leader_velocity = v_c1 + tilt_axis_rate(&s, &sd) * p.leader_cable;

                let o = PAYLOAD_DIM + 4;
                if self.cfg.feedback == Feedback::Ideal {
                    let s = Vector2::new(x[o], x[o + 1]);
                    let sd = Vector2::new(x[o + 2], x[o + 3]);
                    let axis = tilt_axis(&s);
                    let applied = follower_cmd + h.follower_dist;
                    let (force, slack) = tension_only(&applied, &axis);
                    e.follower_force = force;
                    e.follower_slack = slack;
                    e.follower_load = force - h.follower_dist;
                    e.follower_tilt_target = Vector2::new(applied.x, applied.y) / applied.z.max(1e-9);
                    e.follower_position = p_c2 + axis * p.follower_cable;
                    e.follower_velocity = v_c2 + tilt_axis_rate(&s, &sd) * p.follower_cable;
                } else {
                    let pf = Vector2::new(x[o], x[o + 1]);
                    let vf = Vector2::new(x[o + 2], x[o + 3]);
                    let offset = pf - p_c2.xy();
                    let (force, clamped) = pendulum_force(&offset, p.follower_cable, hw);
                    let (oc, _) = clamp_offset(&offset, p.follower_cable);
                    let height = (p.follower_cable.powi(2) - oc.norm_squared()).sqrt();
                    let rel = vf - v_c2.xy();
                    let vz = if clamped { 0.0 } else { -oc.dot(&rel) / height };
                    e.follower_force = force;
                    e.offset_clamped = clamped;
                    e.follower_position = Vector3::new(pf.x, pf.y, p_c2.z + height);
                    e.follower_velocity = Vector3::new(vf.x, vf.y, vz);
                    let drag = self.follower_params.drag * horizontal(&e.follower_velocity);
                    e.follower_load = force + drag - h.follower_dist;
                }
            }
            Fidelity::Rotor => {
                let (k, c) = (self.cfg.cable_stiffness, self.cfg.cable_damping);
                let ls = self.leader_block.state(x);
                let fs = self.follower_block.state(x);
                let (fl, sl) = elastic_cable_force(&p_c1, &v_c1, &ls.position, &ls.velocity, p.leader_cable, k, c);
                let (ff, sf) = elastic_cable_force(&p_c2, &v_c2, &fs.position, &fs.velocity, p.follower_cable, k, c);
                e.leader_force = fl;
                e.follower_force = ff;
                e.leader_slack = sl;
                e.follower_slack = sf;
                e.leader_command = h.leader;
                e.follower_command = h.follower;
                e.leader_load = fl + self.leader_params.drag * ls.velocity - h.leader_dist;
                e.follower_load = ff + self.follower_params.drag * fs.velocity - h.follower_dist;
                e.leader_position = ls.position;
                e.leader_velocity = ls.velocity;
                e.follower_position = fs.position;
                e.follower_velocity = fs.velocity;
            }
        }
        e
    }

    fn rates(&self, t: f64, x: &[f64]) -> Vec<f64> {
        let e = self.eval(t, x);
        let r = rotation_from_yaw(e.payload.theta);
        let forces = BodyForces { leader: r.transpose() * e.leader_force, follower: r.transpose() * e.follower_force };
        let mut dx = vec![0.0; x.len()];
        rates_to_slice(&payload_rates(&e.payload, &forces, &self.params, self.cfg.payload_model()), &mut dx);
        let wn = TILT_BANDWIDTH;
        let tilt = |dx: &mut [f64], o: usize, target: &Vector2<f64>| {
            dx[o] = x[o + 2];
            dx[o + 1] = x[o + 3];
            dx[o + 2] = wn * wn * (target.x - x[o]) - 2.0 * wn * x[o + 2];
            dx[o + 3] = wn * wn * (target.y - x[o + 1]) - 2.0 * wn * x[o + 3];
        };
        match self.cfg.mode {
            Fidelity::Force => {
                tilt(&mut dx, PAYLOAD_DIM, &e.leader_tilt_target);
                let o = PAYLOAD_DIM + 4;
                if self.cfg.feedback == Feedback::Ideal {
                    tilt(&mut dx, o, &e.follower_tilt_target);
                } else {
                    let fp = &self.follower_params;
                    let v = Vector2::new(x[o + 2], x[o + 3]);
                    let u = self.held.follower.xy() + self.held.follower_dist.xy();
                    let a = (u - fp.drag * v - e.follower_force.xy()) / fp.mass;
                    dx[o] = v.x;
                    dx[o + 1] = v.y;
                    dx[o + 2] = a.x;
                    dx[o + 3] = a.y;
                }
            }
            Fidelity::Rotor => {
                self.uav_rates(
                    &self.leader_block,
                    &self.leader_params,
                    x,
                    &e.leader_force,
                    &self.held.leader_dist,
                    &self.leader_rotor_cmd,
                    &mut dx,
                );
                self.uav_rates(
                    &self.follower_block,
                    &self.follower_params,
                    x,
                    &e.follower_force,
                    &self.held.follower_dist,
                    &self.follower_rotor_cmd,
                    &mut dx,
                );
            }
        }
        dx
    }

    #[allow(clippy::too_many_arguments)]
    fn uav_rates(
        &self,
        block: &UavBlock,
        params: &UavParams,
        x: &[f64],
        cable: &Vector3<f64>,
        dist: &Vector3<f64>,
        cmd: &DVector<f64>,
        dx: &mut [f64],
    ) {
        let o = block.offset;
        let s = block.state(x);
        let f = block.thrusts(x);
        let w = &params.allocation * &f;
        let thrust = w[0];
        let moment = Vector3::new(w[1], w[2], w[3]);
        let accel = (s.attitude * e3() * thrust - cable + dist - s.velocity * params.drag) / params.mass - e3() * GRAVITY;
        let q = Quaternion::new(x[o + 6], x[o + 7], x[o + 8], x[o + 9]);
        let om = s.angular_velocity;
        let qd = q * Quaternion::new(0.0, om.x, om.y, om.z) * 0.5;
        let j = &params.inertia;
        let jinv = j.try_inverse().unwrap_or_else(Matrix3::identity);
        let wd = jinv * (moment - om.cross(&(j * om)));
        dx[o..o + 3].copy_from_slice(s.velocity.as_slice());
        dx[o + 3..o + 6].copy_from_slice(accel.as_slice());
        dx[o + 6..o + 10].copy_from_slice(&[qd.w, qd.i, qd.j, qd.k]);
        dx[o + 10..o + 13].copy_from_slice(wd.as_slice());
        let tau = self.cfg.rotor_tau;
        for i in 0..block.rotors {
            dx[o + UAV_BASE_DIM + i] = (cmd[i] - f[i]) / tau;
        }
    }

    /// Attitude control and allocation for both vehicles, held over one integration step.
    fn low_level(&mut self) {
        let g = &self.cfg.lowlevel_gains;
        let run = |block: &UavBlock, params: &UavParams, force: &Vector3<f64>, accel: &Vector3<f64>, yaw: f64, max: f64| {
            let s = block.state(&self.x);
            let demand = force + e3() * (params.mass * GRAVITY) + accel * params.mass;
            let r_d = desired_attitude(&demand, yaw);
            let w = geometric_thrust_moment(&s, force, accel, &r_d, &Vector3::zeros(), &Vector3::zeros(), g, params);
            allocate_rotors(&w, params, max)
        };
        let h = self.held;
        let a =
            run(&self.leader_block, &self.leader_params, &h.leader, &h.leader_accel, h.leader_yaw, self.cfg.leader_uav.max_rotor_thrust);
        let b = run(
            &self.follower_block,
            &self.follower_params,
            &h.follower,
            &Vector3::zeros(),
            h.follower_yaw,
            self.cfg.follower_uav.max_rotor_thrust,
        );
        self.rotor_clamped = a.clamped || b.clamped;
        self.leader_rotor_cmd = a.thrusts;
        self.follower_rotor_cmd = b.thrusts;
    }

    fn control(&mut self, t: f64) -> Result<(), SimError> {
        let reference = self.spec.sample(t, self.heading);
        self.heading = reference.theta;
        let e = self.eval(t, &self.x);
        if self.step > 0 {
            self.update_estimators(t, &e).map_err(|source| SimError::EstimatorFault { t, source })?;
        }
        self.est.leader_velocity = e.leader_velocity;
        self.est.follower_velocity = e.follower_velocity;

        let p = self.params;
        let hw = p.half_weight();
        match (self.cfg.mode, self.cfg.feedback) {
            (Fidelity::Force, Feedback::Ideal) => {}
            (Fidelity::Rotor, Feedback::Ideal) => {
                let pay = e.payload;
                let f = self.ideal_forces(t, &pay);
                let r = rotation_from_yaw(pay.theta);
                self.held.leader = r * Vector3::new(f.leader.0, f.leader.1, hw);
                self.held.follower = r * Vector3::new(f.follower.0, f.follower.1, hw);
                self.held.saturated = f.saturated;
                self.held.leader_yaw = pay.theta;
                self.held.follower_yaw = pay.theta;
            }
            (_, Feedback::Estimated) => {
                self.leader_command(&reference);
                self.follower_command(t);
            }
        }
        self.held.leader_accel = horizontal(&reference.acceleration);

        let d = self.cfg.disturbance;
        let draw = |rng: &mut ChaCha8Rng, var: f64| horizontal(&inject_noise3(&Vector3::zeros(), var, rng));
        self.held.leader_dist = draw(&mut self.rngs.leader_disturbance, d.leader);
        self.held.follower_dist = draw(&mut self.rngs.follower_disturbance, d.follower);
        Ok(())
    }

    fn leader_command(&mut self, reference: &ReferenceSample) {
        let p = self.params;
        let lg = self.cfg.leader_gains;
        let est = &self.est;
        let theta = est.theta;
        let omega = est.omega;
        let p_c2 = estimate_c2(&est.payload.position(), theta, &p);
        let v = est.v_hat;
        let r = rotation_from_yaw(theta);
        let ff_body = r.transpose() * est.payload.follower_force();
        let mut err = tracking_error(reference, &p_c2, theta);
        let (v_d, omega_d) = kinematic_control(&err, reference, &lg);
        err.eta1 = v_d - v;
        err.eta2 = omega_d - omega;
        let (v_d_dot, omega_d_dot) = desired_rates(&err, v, omega, reference, &lg);
        let (fx, fy) = leader_force_control(&err, omega, v_d_dot, omega_d_dot, ff_body.y, &p, &lg);
        let ((fx, fy), saturated) = self.cfg.force_bounds.apply(fx, fy);
        self.held.leader = r * Vector3::new(fx, fy, p.half_weight());
        self.held.saturated = saturated;
        self.held.leader_yaw = theta;
    }

    fn follower_command(&mut self, t: f64) {
        let p = self.params;
        let fg = self.cfg.follower_gains;
        let dt = self.control_dt();
        let est = &mut self.est;
        let p_f = est.follower.position();
        est.curvature.push(t, p_f.xy());
        if let Some(m) = est.curvature.estimate() {
            if m.speed > HEADING_MIN_SPEED {
                est.heading = m.heading;
                est.radius = m.radius;
            } else {
                est.radius = f64::INFINITY;
            }
        }
        // Payload frame from the payload IMU heading.
        let r = rotation_from_yaw(est.theta);
        let force_b = r.transpose() * est.follower.force();
        let vel_b = r.transpose() * est.follower.velocity();

        let before = self.trigger.mode;
        self.trigger.update(force_b.x, 0.0, &fg);
        if before == TriggerMode::Enabled && self.trigger.mode == TriggerMode::Disabled {
            est.hold_point = p_f.xy();
        }
        let offset = cable_offset_from_force(&force_b, &p);
        let swing = est.previous_offset.map_or(Vector2::zeros(), |prev| (offset - prev) / dt);
        est.previous_offset = Some(offset);
        let along = (r.transpose() * Vector3::new(p_f.x - est.hold_point.x, p_f.y - est.hold_point.y, 0.0)).x;
        let relative = TriggerState { hold_x: 0.0, ..self.trigger };
        // The velocity term acts on c2's velocity relative to the follower and the cable
        // force is not fed forward, so the follower is dragged along instead of running away.
        let fx = follower_longitudinal_control(&relative, -swing.x, 0.0, along, &fg);
        // Transverse damping sees both the swing and the follower's own side slip.
        let fy =
            follower_transverse_control(offset.y, swing.y + vel_b.y, vel_b.x, est.radius, self.follower_params.mass, &fg, &p) + force_b.y;
        self.held.follower = r * Vector3::new(fx, fy, p.half_weight());
        self.held.follower_yaw = est.heading;
    }

    /// Runs the three filters on measurements synthesized from the state at `t`.
    fn update_estimators(&mut self, _t: f64, e: &Eval) -> Result<(), crate::estimation::EstimationError> {
        let dt = self.control_dt();
        let p = self.params;
        let s = self.cfg.sensors;
        let rotor = self.cfg.mode == Fidelity::Rotor;
        let g = e3() * GRAVITY;

        let leader_thrust = (e.leader_velocity - self.est.leader_velocity) * (self.leader_params.mass / dt)
            + g * self.leader_params.mass
            + self.leader_load_avg;
        let follower_thrust = (e.follower_velocity - self.est.follower_velocity) * (self.follower_params.mass / dt)
            + g * self.follower_params.mass
            + self.follower_load_avg;

        let (la, lw, fa, fw) = if rotor {
            let ls = self.leader_block.state(&self.x);
            let fs = self.follower_block.state(&self.x);
            (self.leader_block.quaternion(&self.x), ls.angular_velocity, self.follower_block.quaternion(&self.x), fs.angular_velocity)
        } else {
            let to_q = |m: Matrix3<f64>| UnitQuaternion::from_rotation_matrix(&Rotation3::from_matrix_unchecked(m));
            let la = to_q(desired_attitude(&leader_thrust, e.payload.theta));
            let fa = to_q(desired_attitude(&follower_thrust, self.est.heading));
            // Attitude is held over each step, so the body rates read zero.
            (la, Vector3::zeros(), fa, Vector3::zeros())
        };
        self.est.leader_attitude = la;
        self.est.follower_attitude = fa;

        let measure = |rng: &mut ChaCha8Rng, pos: &Vector3<f64>, vel: &Vector3<f64>, att: &UnitQuaternion<f64>, w: &Vector3<f64>| {
            let position = inject_noise3(pos, s.position, rng);
            let velocity = inject_noise3(vel, s.velocity, rng);
            let tilt = inject_noise3(&Vector3::zeros(), s.attitude, rng);
            let attitude = att * UnitQuaternion::from_scaled_axis(tilt);
            let angular_velocity = inject_noise3(w, s.gyro, rng);
            VehicleMeasurement { position, velocity, attitude, angular_velocity }
        };
        let ml = measure(&mut self.rngs.leader_sensors, &e.leader_position, &e.leader_velocity, &la, &lw);
        let mf = measure(&mut self.rngs.follower_sensors, &e.follower_position, &e.follower_velocity, &fa, &fw);
        let tl = leader_thrust.dot(&(la * e3()));
        let tf = follower_thrust.dot(&(fa * e3()));

        let est = &mut self.est;
        if !rotor {
            // Force-level vehicles turn instantly, so the attitude flown over the step is the
            // one just measured; the filters predict with it instead of the previous sample.
            est.leader.set_attitude(la);
            est.follower.set_attitude(fa);
        }
        est.leader.step(tl, &ml, dt)?;
        est.follower.step(tf, &mf, dt)?;

        let f_l = est.leader.force();
        if let Ok(c1) = estimate_c1(&est.leader.position(), &f_l, p.leader_cable, FORCE_DIRECTION_FRACTION * p.mass * GRAVITY) {
            est.p_c1 = c1;
        }

        let pay = e.payload;
        let r = rotation_from_yaw(pay.theta);
        let forces = BodyForces { leader: r.transpose() * e.leader_force, follower: r.transpose() * e.follower_force };
        let rates = payload_rates(&pay, &forces, &p, self.cfg.payload_model());
        let a_c1 = c1_acceleration(&pay, &rates, &p);
        let theta_m = inject_noise(pay.theta, s.heading, &mut self.rngs.imu);
        let omega_m = inject_noise(pay.omega, s.gyro, &mut self.rngs.imu);
        let accel_m = inject_noise3(&a_c1, s.accel, &mut self.rngs.imu);
        let omega_dot = est.omega_dot.update(omega_m, dt);
        est.payload.step(&f_l, &accel_m, omega_m, omega_dot, theta_m, &est.p_c1, dt)?;
        est.theta = theta_m;
        est.omega = omega_m;
        est.v_hat = estimate_longitudinal_velocity(&est.payload.velocity(), theta_m);
        Ok(())
    }
}

/// Inertial acceleration of `c1` given the payload state and its rates.
fn c1_acceleration(pay: &PayloadState, rates: &PayloadRates, params: &PayloadParams) -> Vector3<f64> {
    let l2 = params.length / 2.0;
    let w = pay.omega;
    let wd = rates.omega;
    let uy = pay.v_lat + w * l2;
    let cog = Vector3::new(rates.v - w * uy, rates.v_lat + wd * l2 + w * pay.v, 0.0);
    let r = params.r_c1_p();
    let rel = Vector3::new(-wd * r.y - w * w * r.x, wd * r.x - w * w * r.y, 0.0);
    rotation_from_yaw(pay.theta) * (cog + rel)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pure_tension_passes_through() {
        let f = Vector3::new(0.3, -0.2, 2.45);
        let axis = f.normalize();
        let r = resolve_cable_forces(&f, &axis, &f, &axis);
        assert_eq!((r.leader, r.leader_slack), (f, false));
    }

    #[test]
    fn compression_goes_slack() {
        let axis = Vector3::z();
        let r = resolve_cable_forces(&Vector3::new(0.0, 0.0, -1.0), &axis, &Vector3::new(0.0, 0.0, 1.0), &axis);
        assert!(r.leader_slack && !r.follower_slack);
        assert_eq!(r.leader, Vector3::zeros());
    }

    #[test]
    fn hover_tensions_carry_the_weight() {
        let params = PayloadParams::default();
        let up = Vector3::new(0.0, 0.0, params.half_weight());
        let r = resolve_cable_forces(&up, &Vector3::z(), &up, &Vector3::z());
        assert!((r.leader.z + r.follower.z - params.mass * GRAVITY).abs() < 1e-12);
    }

    #[test]
    fn elastic_cable_is_unilateral() {
        let (f, slack) =
            elastic_cable_force(&Vector3::zeros(), &Vector3::zeros(), &Vector3::new(0.0, 0.0, 0.17), &Vector3::zeros(), 0.18, 2e3, 40.0);
        assert!(slack && f == Vector3::zeros());
        let (f, slack) =
            elastic_cable_force(&Vector3::zeros(), &Vector3::zeros(), &Vector3::new(0.0, 0.0, 0.181), &Vector3::zeros(), 0.18, 2e3, 40.0);
        assert!(!slack && (f.z - 2.0).abs() < 1e-9);
    }

    #[test]
    fn pendulum_force_vertical_when_centered() {
        let (f, clamped) = pendulum_force(&Vector2::zeros(), 0.18, 2.45);
        assert_eq!((f, clamped), (Vector3::new(0.0, 0.0, 2.45), false));
        let (_, clamped) = pendulum_force(&Vector2::new(0.2, 0.0), 0.18, 2.45);
        assert!(clamped);
    }

    #[test]
    fn tilt_axis_rate_matches_difference() {
        let s = Vector2::new(0.3, -0.1);
        let sd = Vector2::new(0.7, 0.2);
        let h = 1e-6;
        let fd = (tilt_axis(&(s + sd * h)) - tilt_axis(&(s - sd * h))) / (2.0 * h);
        assert!((fd - tilt_axis_rate(&s, &sd)).norm() < 1e-8);
    }

    #[test]
    fn c1_acceleration_matches_difference() {
        let params = PayloadParams::default();
        let pay = PayloadState { position: Vector3::new(1.0, 2.0, 1.0), theta: 0.4, v: 0.8, v_lat: 0.1, omega: 0.5 };
        let forces = BodyForces::planar(0.3, 0.2, -0.1, 0.4, &params);
        let rates = payload_rates(&pay, &forces, &params, PayloadModel::Rigid);
        let h = 1e-5;
        let vel = |s: &PayloadState| s.point_velocity(&params.r_c1_p(), &params);
        let fwd = step_payload(&pay, &forces, &params, PayloadModel::Rigid, h);
        let back = step_payload(&pay, &forces, &params, PayloadModel::Rigid, -h);
        let fd = (vel(&fwd) - vel(&back)) / (2.0 * h);
        assert!((fd - c1_acceleration(&pay, &rates, &params)).norm() < 1e-7);
    }
}
