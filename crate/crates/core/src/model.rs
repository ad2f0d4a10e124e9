//! Physical types, frame conversions and the payload's open-loop model.
//!
//! The payload is a rigid bar moving in a horizontal plane. Point `c2` (the
//! follower end) carries the reference trajectory, point `c1` (the leader end)
//! carries the IMU. Body frame `B` has `x` along the bar from `c2` to `c1`.

use nalgebra::{DMatrix, Matrix3, Vector3};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Gravitational acceleration [m/s^2].
pub const GRAVITY: f64 = 9.81;

/// Speeds below this are treated as a stationary reference.
pub const STATIONARY_SPEED: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ParamError {
    #[error("parameter `{0}` must be strictly positive (got {1})")]
    NotPositive(&'static str, f64),
    #[error("allocation matrix must be 4 x n with full row rank")]
    RankDeficient,
    #[error("rotor count mismatch: {rotors} thrust constants for {columns} allocation columns")]
    RotorCount { rotors: usize, columns: usize },
}

fn positive(name: &'static str, value: f64) -> Result<(), ParamError> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(ParamError::NotPositive(name, value))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PayloadParams {
    /// Payload mass [kg].
    pub mass: f64,
    /// Yaw moment of inertia about the CoG [kg m^2].
    pub izz: f64,
    /// Bar length [m].
    pub length: f64,
    /// Leader cable length `l1` [m].
    pub leader_cable: f64,
    /// Follower cable length `l2` [m].
    pub follower_cable: f64,
}

impl Default for PayloadParams {
    fn default() -> Self {
        Self { mass: 0.5, izz: 0.083, length: 1.0, leader_cable: 0.18, follower_cable: 0.18 }
    }
}

impl PayloadParams {
    pub fn validate(&self) -> Result<(), ParamError> {
        positive("payload.mass", self.mass)?;
        positive("payload.izz", self.izz)?;
        positive("payload.length", self.length)?;
        positive("payload.leader_cable", self.leader_cable)?;
        positive("payload.follower_cable", self.follower_cable)
    }

    /// Body-frame offset from the CoG to `c2`.
    pub fn r_c2_p(&self) -> Vector3<f64> {
        Vector3::new(-self.length / 2.0, 0.0, 0.0)
    }

    /// Body-frame offset from the CoG to `c1`.
    pub fn r_c1_p(&self) -> Vector3<f64> {
        Vector3::new(self.length / 2.0, 0.0, 0.0)
    }

    /// Body-frame offset from `c1` to the CoG.
    pub fn r_p_c1(&self) -> Vector3<f64> {
        Vector3::new(-self.length / 2.0, 0.0, 0.0)
    }

    /// Vertical load carried by each cable, `m_p g / 2`.
    pub fn half_weight(&self) -> f64 {
        0.5 * self.mass * GRAVITY
    }
}

/// Planar pose and velocities of the bar.
///
/// `v` and `v_lat` are the body-frame velocity components of `c2`. Under the
/// nonholonomic model `v_lat` stays at zero.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PayloadState {
    pub position: Vector3<f64>,
    pub theta: f64,
    pub v: f64,
    pub omega: f64,
    pub v_lat: f64,
}

impl PayloadState {
    /// Inertial velocity of the CoG.
    pub fn cog_velocity(&self, params: &PayloadParams) -> Vector3<f64> {
        let body = Vector3::new(self.v, self.v_lat + self.omega * params.length / 2.0, 0.0);
        rotation_from_yaw(self.theta) * body
    }

    /// Inertial velocity of a body-fixed point at offset `r` from the CoG.
    pub fn point_velocity(&self, r: &Vector3<f64>, params: &PayloadParams) -> Vector3<f64> {
        let w = Vector3::new(0.0, 0.0, self.omega);
        self.cog_velocity(params) + w.cross(&(rotation_from_yaw(self.theta) * r))
    }

    /// Place the bar so that `c2` sits at `p_c2` with heading `theta`.
    pub fn from_c2(p_c2: Vector3<f64>, theta: f64, params: &PayloadParams) -> Self {
        let position = p_c2 - rotation_from_yaw(theta) * params.r_c2_p();
        Self { position, theta, ..Default::default() }
    }
}

/// Multirotor parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UavParams {
    pub mass: f64,
    pub inertia: Matrix3<f64>,
    /// Per-rotor thrust constants `k_i` in `f_i = k_i w_i^2` [N s^2].
    pub rotor_constants: Vec<f64>,
    /// Maps rotor thrusts to `(T, Mx, My, Mz)`.
    pub allocation: DMatrix<f64>,
    /// Linear translational drag [N s/m]; not modeled by the estimators.
    pub drag: f64,
}

impl UavParams {
    /// X-configuration quadrotor with arm length `arm` and yaw moment coefficient `c_m`.
    pub fn quad_x(mass: f64, inertia: Matrix3<f64>, arm: f64, c_m: f64, k_rotor: f64) -> Self {
        let d = arm / std::f64::consts::SQRT_2;
        // rotor positions: (d,-d), (-d,d), (d,d), (-d,-d); first two share a spin direction
        #[rustfmt::skip]
        let allocation = DMatrix::from_row_slice(4, 4, &[
            1.0, 1.0, 1.0, 1.0,
            -d,  d,   d,  -d,
            -d,  d,  -d,   d,
            c_m, c_m, -c_m, -c_m,
        ]);
        Self { mass, inertia, rotor_constants: vec![k_rotor; 4], allocation, drag: 0.0 }
    }

    pub fn rotor_count(&self) -> usize {
        self.rotor_constants.len()
    }

    pub fn validate(&self) -> Result<(), ParamError> {
        positive("uav.mass", self.mass)?;
        for k in &self.rotor_constants {
            positive("uav.rotor_constant", *k)?;
        }
        if self.allocation.ncols() != self.rotor_constants.len() {
            return Err(ParamError::RotorCount { rotors: self.rotor_constants.len(), columns: self.allocation.ncols() });
        }
        if self.allocation.nrows() != 4 || self.allocation.rank(1e-9) != 4 {
            return Err(ParamError::RankDeficient);
        }
        if self.drag < 0.0 {
            return Err(ParamError::NotPositive("uav.drag", self.drag));
        }
        Ok(())
    }
}

impl Default for UavParams {
    fn default() -> Self {
        Self::quad_x(1.5, Matrix3::from_diagonal(&Vector3::new(0.03, 0.03, 0.05)), 0.225, 0.016, 8.54858e-6)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UavState {
    pub position: Vector3<f64>,
    pub velocity: Vector3<f64>,
    /// Body to inertial rotation.
    pub attitude: Matrix3<f64>,
    pub angular_velocity: Vector3<f64>,
}

impl Default for UavState {
    fn default() -> Self {
        Self { position: Vector3::zeros(), velocity: Vector3::zeros(), attitude: Matrix3::identity(), angular_velocity: Vector3::zeros() }
    }
}

impl UavState {
    /// Largest deviation of `R^T R` from identity, plus `|det R - 1|`.
    pub fn attitude_defect(&self) -> f64 {
        so3_defect(&self.attitude)
    }
}

/// Reference for point `c2` at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ReferenceSample {
    pub position: Vector3<f64>,
    pub velocity: Vector3<f64>,
    pub acceleration: Vector3<f64>,
    pub theta: f64,
    pub omega: f64,
    pub speed: f64,
    /// Time derivative of `speed`.
    pub speed_rate: f64,
    /// Time derivative of `omega`.
    pub omega_rate: f64,
}

impl ReferenceSample {
    /// Builds a sample from planar derivatives of orders 0..=4.
    ///
    /// When the reference is stationary the heading falls back to the
    /// direction of the lowest non-vanishing higher derivative (the limit of
    /// the tangent), then to `previous_heading`.
    pub fn from_derivatives(d: &[Vector3<f64>; 5], previous_heading: f64) -> Self {
        let (vx, vy) = (d[1].x, d[1].y);
        let (ax, ay) = (d[2].x, d[2].y);
        let (jx, jy) = (d[3].x, d[3].y);
        let speed2 = vx * vx + vy * vy;
        let speed = speed2.sqrt();

        let theta = if speed > STATIONARY_SPEED {
            vy.atan2(vx)
        } else {
            d[2..].iter().find(|k| k.x.hypot(k.y) > STATIONARY_SPEED).map(|k| k.y.atan2(k.x)).unwrap_or(previous_heading)
        };

        let (omega, speed_rate, omega_rate) = if speed > STATIONARY_SPEED {
            let cross = vx * ay - vy * ax;
            let dot = vx * ax + vy * ay;
            let omega = cross / speed2;
            let cross_rate = vx * jy - vy * jx;
            let omega_rate = cross_rate / speed2 - 2.0 * cross * dot / (speed2 * speed2);
            (omega, dot / speed, omega_rate)
        } else {
            (0.0, ax.hypot(ay), 0.0)
        };

        Self { position: d[0], velocity: d[1], acceleration: d[2], theta, omega, speed, speed_rate, omega_rate }
    }

    /// A stationary reference at `position`.
    pub fn hold(position: Vector3<f64>, theta: f64) -> Self {
        Self { position, theta, ..Default::default() }
    }
}

/// Body-frame tracking errors of `c2` plus the backstepping signals.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct TrackingError {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
    /// `v_d - v`
    pub eta1: f64,
    /// `omega_d - omega`
    pub eta2: f64,
}

impl TrackingError {
    pub fn norm(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.theta * self.theta + self.eta1 * self.eta1 + self.eta2 * self.eta2).sqrt()
    }
}

/// Cable forces on the payload expressed in the payload body frame.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct BodyForces {
    pub leader: Vector3<f64>,
    pub follower: Vector3<f64>,
}

impl BodyForces {
    /// Planar components with the vertical share fixed to `m_p g / 2` per cable.
    pub fn planar(leader_x: f64, leader_y: f64, follower_x: f64, follower_y: f64, params: &PayloadParams) -> Self {
        let z = params.half_weight();
        Self { leader: Vector3::new(leader_x, leader_y, z), follower: Vector3::new(follower_x, follower_y, z) }
    }

    pub fn leader_inertial(&self, theta: f64) -> Vector3<f64> {
        rotation_from_yaw(theta) * self.leader
    }

    pub fn follower_inertial(&self, theta: f64) -> Vector3<f64> {
        rotation_from_yaw(theta) * self.follower
    }
}

/// Wraps an angle into `(-pi, pi]`.
pub fn wrap_angle(a: f64) -> f64 {
    let mut r = a.rem_euclid(2.0 * PI);
    if r > PI {
        r -= 2.0 * PI;
    }
    r
}

pub fn rotation_from_yaw(theta: f64) -> Matrix3<f64> {
    let (s, c) = theta.sin_cos();
    Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0)
}

pub fn skew(v: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

/// Inverse of [`skew`] for skew-symmetric input.
pub fn vee(m: &Matrix3<f64>) -> Vector3<f64> {
    Vector3::new(m[(2, 1)], m[(0, 2)], m[(1, 0)])
}

/// Orthonormality and determinant defect of a rotation matrix.
pub fn so3_defect(r: &Matrix3<f64>) -> f64 {
    let ortho = (r.transpose() * r - Matrix3::identity()).abs().max();
    ortho + (r.determinant() - 1.0).abs()
}

/// Returns `(p_c1, p_c2)`.
pub fn payload_endpoints(state: &PayloadState, params: &PayloadParams) -> (Vector3<f64>, Vector3<f64>) {
    let r = rotation_from_yaw(state.theta);
    (state.position + r * params.r_c1_p(), state.position + r * params.r_c2_p())
}

/// Position and heading errors in the payload body frame; `eta` fields are zero.
pub fn tracking_error(reference: &ReferenceSample, p_c2: &Vector3<f64>, theta: f64) -> TrackingError {
    let e = rotation_from_yaw(theta).transpose() * (reference.position - p_c2);
    TrackingError { x: e.x, y: e.y, theta: wrap_angle(reference.theta - theta), eta1: 0.0, eta2: 0.0 }
}

/// Open-loop error kinematics, returns `(x_e', y_e', theta_e')`.
pub fn error_kinematics(err: &TrackingError, v: f64, omega: f64, reference: &ReferenceSample) -> (f64, f64, f64) {
    let xdot = omega * err.y + reference.speed * err.theta.cos() - v;
    let ydot = -omega * err.x + reference.speed * err.theta.sin();
    (xdot, ydot, reference.omega - omega)
}

/// Longitudinal acceleration of `c2` under the nonholonomic model.
pub fn payload_accel(forces: &BodyForces, omega: f64, params: &PayloadParams) -> f64 {
    (forces.leader.x + forces.follower.x) / params.mass - params.r_c2_p().x * omega * omega
}

pub fn payload_angular_accel(forces: &BodyForces, params: &PayloadParams) -> f64 {
    params.length / (2.0 * params.izz) * (forces.leader.y - forces.follower.y)
}

/// Kinematic part of the Lyapunov function.
pub fn lyapunov_v1(err: &TrackingError, k2: f64) -> f64 {
    let th = wrap_angle(err.theta);
    0.5 * err.x * err.x + 0.5 * err.y * err.y + (1.0 - th.cos()) / k2
}

pub fn lyapunov_v2(err: &TrackingError, k2: f64) -> f64 {
    lyapunov_v1(err, k2) + 0.5 * err.eta1 * err.eta1 + 0.5 * err.eta2 * err.eta2
}
