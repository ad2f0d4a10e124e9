use super::ukf::{ukf_predict, ukf_update, GaussianBelief, SigmaConfig};
use super::EstimationError;
use crate::model::{rotation_from_yaw, PayloadParams, GRAVITY};
use nalgebra::{DMatrix, DVector, Quaternion, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

fn gravity() -> Vector3<f64> {
    Vector3::new(0.0, 0.0, GRAVITY)
}

fn seg(x: &DVector<f64>, i: usize) -> Vector3<f64> {
    Vector3::new(x[i], x[i + 1], x[i + 2])
}

fn put(x: &mut DVector<f64>, i: usize, v: &Vector3<f64>) {
    x.fixed_rows_mut::<3>(i).copy_from(v);
}

fn block_diag(vars: &[(usize, f64)]) -> DMatrix<f64> {
    let n: usize = vars.iter().map(|(k, _)| k).sum();
    let mut m = DMatrix::zeros(n, n);
    let mut i = 0;
    for &(k, v) in vars {
        for j in i..i + k {
            m[(j, j)] = v;
        }
        i += k;
    }
    m
}

fn check_dt(dt: f64) -> Result<(), EstimationError> {
    if dt > 0.0 && dt.is_finite() {
        Ok(())
    } else {
        Err(EstimationError::NonPositiveDt(dt))
    }
}

/// Modified Rodrigues parameters of `q`, taking the short-rotation representative.
fn mrp_from_quat(q: &UnitQuaternion<f64>) -> Vector3<f64> {
    let q = q.quaternion();
    let (w, v) = if q.w < 0.0 { (-q.w, -q.imag()) } else { (q.w, q.imag()) };
    v / (1.0 + w)
}

fn quat_from_mrp(p: &Vector3<f64>) -> UnitQuaternion<f64> {
    let n2 = p.norm_squared();
    let w = (1.0 - n2) / (1.0 + n2);
    let v = p * (2.0 / (1.0 + n2));
    UnitQuaternion::new_normalize(Quaternion::new(w, v.x, v.y, v.z))
}

/// Noise variances for [`VehicleFilter`]; process terms are per step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VehicleFilterNoise {
    pub q_position: f64,
    pub q_velocity: f64,
    pub q_force: f64,
    pub q_attitude: f64,
    pub q_rate: f64,
    pub r_position: f64,
    pub r_velocity: f64,
    pub r_attitude: f64,
    pub r_rate: f64,
}

impl Default for VehicleFilterNoise {
    fn default() -> Self {
        Self {
            q_position: 1e-6,
            q_velocity: 1e-4,
            q_force: 1.0,
            q_attitude: 1e-6,
            q_rate: 1e-3,
            r_position: 1e-4,
            r_velocity: 1e-6,
            r_attitude: 1e-4,
            r_rate: 1e-3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VehicleMeasurement {
    pub position: Vector3<f64>,
    pub velocity: Vector3<f64>,
    pub attitude: UnitQuaternion<f64>,
    /// Body-frame angular velocity.
    pub angular_velocity: Vector3<f64>,
}

/// Position, velocity, cable force, attitude and rate of one multirotor.
///
/// State layout: `[p, v, F, eps, w]` where `eps` is the attitude error as
/// modified Rodrigues parameters relative to an internal reference
/// quaternion. The reference absorbs `eps` after every update. `F` is the
/// force the vehicle exerts on the cable and follows a random walk.
#[derive(Debug, Clone)]
pub struct VehicleFilter {
    belief: GaussianBelief,
    reference: UnitQuaternion<f64>,
    mass: f64,
    q: DMatrix<f64>,
    r: DMatrix<f64>,
    sigma: SigmaConfig,
}

impl VehicleFilter {
    pub const DIM: usize = 15;

    pub fn new(
        mass: f64,
        initial: &VehicleMeasurement,
        initial_force: Vector3<f64>,
        noise: &VehicleFilterNoise,
        sigma: SigmaConfig,
    ) -> Result<Self, EstimationError> {
        sigma.validate(Self::DIM)?;
        let mut mean = DVector::zeros(Self::DIM);
        put(&mut mean, 0, &initial.position);
        put(&mut mean, 3, &initial.velocity);
        put(&mut mean, 6, &initial_force);
        put(&mut mean, 12, &initial.angular_velocity);
        let cov = block_diag(&[(3, noise.r_position), (3, noise.r_velocity), (3, 1.0), (3, noise.r_attitude), (3, noise.r_rate)]);
        let q = block_diag(&[(3, noise.q_position), (3, noise.q_velocity), (3, noise.q_force), (3, noise.q_attitude), (3, noise.q_rate)]);
        let r = block_diag(&[(3, noise.r_position), (3, noise.r_velocity), (3, noise.r_attitude), (3, noise.r_rate)]);
        Ok(Self { belief: GaussianBelief::new(mean, cov)?, reference: initial.attitude, mass, q, r, sigma })
    }

    /// One predict/update cycle with collective thrust `thrust` along body `z`.
    pub fn step(&mut self, thrust: f64, measured: &VehicleMeasurement, dt: f64) -> Result<(), EstimationError> {
        check_dt(dt)?;
        let reference = self.reference;
        let next_reference = reference * UnitQuaternion::from_scaled_axis(self.angular_velocity() * dt);
        let next_inv = next_reference.inverse();
        let m = self.mass;
        let process = |x: &DVector<f64>| {
            let (p, v, f, eps, w) = (seg(x, 0), seg(x, 3), seg(x, 6), seg(x, 9), seg(x, 12));
            let q = quat_from_mrp(&eps) * reference;
            let accel = q * Vector3::new(0.0, 0.0, thrust / m) - gravity() - f / m;
            let q_next = q * UnitQuaternion::from_scaled_axis(w * dt);
            let mut out = x.clone();
            put(&mut out, 0, &(p + v * dt));
            put(&mut out, 3, &(v + accel * dt));
            put(&mut out, 9, &mrp_from_quat(&(q_next * next_inv)));
            out
        };
        let predicted = ukf_predict(&self.belief, process, &self.q, &self.sigma)?;

        let mut y = DVector::zeros(12);
        put(&mut y, 0, &measured.position);
        put(&mut y, 3, &measured.velocity);
        put(&mut y, 6, &mrp_from_quat(&(measured.attitude * next_inv)));
        put(&mut y, 9, &measured.angular_velocity);
        let measure = |x: &DVector<f64>| {
            let mut z = DVector::zeros(12);
            z.rows_mut(0, 6).copy_from(&x.rows(0, 6));
            z.rows_mut(6, 6).copy_from(&x.rows(9, 6));
            z
        };
        let mut updated = ukf_update(&predicted, measure, &self.r, &y, &self.sigma)?;

        let eps = seg(&updated.mean, 9);
        self.reference = quat_from_mrp(&eps) * next_reference;
        put(&mut updated.mean, 9, &Vector3::zeros());
        self.belief = updated;
        Ok(())
    }

    pub fn belief(&self) -> &GaussianBelief {
        &self.belief
    }

    pub fn position(&self) -> Vector3<f64> {
        seg(&self.belief.mean, 0)
    }

    pub fn velocity(&self) -> Vector3<f64> {
        seg(&self.belief.mean, 3)
    }

    /// Estimated force the vehicle applies to its cable.
    pub fn force(&self) -> Vector3<f64> {
        seg(&self.belief.mean, 6)
    }

    pub fn attitude(&self) -> UnitQuaternion<f64> {
        quat_from_mrp(&seg(&self.belief.mean, 9)) * self.reference
    }

    /// Re-centres the attitude estimate on `q`, keeping the covariance.
    pub fn set_attitude(&mut self, q: UnitQuaternion<f64>) {
        self.reference = q;
        put(&mut self.belief.mean, 9, &Vector3::zeros());
    }

    pub fn angular_velocity(&self) -> Vector3<f64> {
        seg(&self.belief.mean, 12)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PayloadFilterNoise {
    pub q_position: f64,
    pub q_velocity: f64,
    pub q_accel: f64,
    pub q_force: f64,
    pub r_position: f64,
    pub r_accel: f64,
}

impl Default for PayloadFilterNoise {
    fn default() -> Self {
        Self { q_position: 1e-6, q_velocity: 1e-4, q_accel: 1e-2, q_force: 1e-6, r_position: 1e-4, r_accel: 1e-2 }
    }
}

/// Acceleration of the CoG from the acceleration of `c1` and the yaw motion.
pub fn cog_acceleration(a_c1: &Vector3<f64>, omega: f64, omega_dot: f64, theta: f64, params: &PayloadParams) -> Vector3<f64> {
    let r = rotation_from_yaw(theta) * params.r_p_c1();
    let w = Vector3::new(0.0, 0.0, omega);
    let wd = Vector3::new(0.0, 0.0, omega_dot);
    a_c1 + wd.cross(&r) + w.cross(&w.cross(&r))
}

/// Leader-side estimate of `c1` motion and the follower's cable force.
///
/// State layout: `[p_c1, v_c1, a_c1, F_F]`. The force is tied to the
/// acceleration through the payload's translational balance.
#[derive(Debug, Clone)]
pub struct PayloadFilter {
    belief: GaussianBelief,
    params: PayloadParams,
    q: DMatrix<f64>,
    r: DMatrix<f64>,
    sigma: SigmaConfig,
}

impl PayloadFilter {
    pub const DIM: usize = 12;

    pub fn new(
        params: PayloadParams,
        p_c1: Vector3<f64>,
        leader_force: Vector3<f64>,
        noise: &PayloadFilterNoise,
        sigma: SigmaConfig,
    ) -> Result<Self, EstimationError> {
        sigma.validate(Self::DIM)?;
        let mut mean = DVector::zeros(Self::DIM);
        put(&mut mean, 0, &p_c1);
        put(&mut mean, 9, &(gravity() * params.mass - leader_force));
        let cov = block_diag(&[(3, noise.r_position), (3, 1e-2), (3, noise.r_accel), (3, 1.0)]);
        let q = block_diag(&[(3, noise.q_position), (3, noise.q_velocity), (3, noise.q_accel), (3, noise.q_force)]);
        let r = block_diag(&[(3, noise.r_position), (3, noise.r_accel)]);
        Ok(Self { belief: GaussianBelief::new(mean, cov)?, params, q, r, sigma })
    }

    /// One cycle. `p_c1_measured` comes from [`super::estimate_c1`].
    #[allow(clippy::too_many_arguments)]
    pub fn step(
        &mut self,
        leader_force: &Vector3<f64>,
        accel_measured: &Vector3<f64>,
        omega: f64,
        omega_dot: f64,
        theta: f64,
        p_c1_measured: &Vector3<f64>,
        dt: f64,
    ) -> Result<(), EstimationError> {
        check_dt(dt)?;
        let params = self.params;
        let process = |x: &DVector<f64>| {
            let (p, v, a) = (seg(x, 0), seg(x, 3), seg(x, 6));
            let a_p = cog_acceleration(&a, omega, omega_dot, theta, &params);
            let f = a_p * params.mass - leader_force + gravity() * params.mass;
            let mut out = x.clone();
            put(&mut out, 0, &(p + v * dt));
            put(&mut out, 3, &(v + a * dt));
            put(&mut out, 9, &f);
            out
        };
        let predicted = ukf_predict(&self.belief, process, &self.q, &self.sigma)?;
        let mut y = DVector::zeros(6);
        put(&mut y, 0, p_c1_measured);
        put(&mut y, 3, accel_measured);
        let measure = |x: &DVector<f64>| {
            let mut z = DVector::zeros(6);
            z.rows_mut(0, 3).copy_from(&x.rows(0, 3));
            z.rows_mut(3, 3).copy_from(&x.rows(6, 3));
            z
        };
        self.belief = ukf_update(&predicted, measure, &self.r, &y, &self.sigma)?;
        Ok(())
    }

    pub fn belief(&self) -> &GaussianBelief {
        &self.belief
    }

    pub fn position(&self) -> Vector3<f64> {
        seg(&self.belief.mean, 0)
    }

    pub fn velocity(&self) -> Vector3<f64> {
        seg(&self.belief.mean, 3)
    }

    pub fn acceleration(&self) -> Vector3<f64> {
        seg(&self.belief.mean, 6)
    }

    /// Estimated force the follower applies to the payload, inertial frame.
    pub fn follower_force(&self) -> Vector3<f64> {
        seg(&self.belief.mean, 9)
    }
}

/// Backward difference of a measured rate followed by a one-pole low-pass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateDifferentiator {
    tau: f64,
    previous: Option<f64>,
    value: f64,
}

impl RateDifferentiator {
    pub fn new(tau: f64) -> Self {
        Self { tau, previous: None, value: 0.0 }
    }

    pub fn update(&mut self, sample: f64, dt: f64) -> f64 {
        if let Some(prev) = self.previous {
            let raw = (sample - prev) / dt;
            self.value += dt / (self.tau + dt) * (raw - self.value);
        }
        self.previous = Some(sample);
        self.value
    }

    pub fn value(&self) -> f64 {
        self.value
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mrp_round_trip() {
        let q = UnitQuaternion::from_euler_angles(0.2, -0.4, 1.1);
        let back = quat_from_mrp(&mrp_from_quat(&q));
        assert!(q.angle_to(&back) < 1e-12);
        let neg = UnitQuaternion::new_unchecked(-q.into_inner());
        assert!((mrp_from_quat(&q) - mrp_from_quat(&neg)).norm() < 1e-15);
    }

    #[test]
    fn no_rotation_means_no_transport_terms() {
        let params = PayloadParams::default();
        let a = Vector3::new(0.3, -0.1, 0.0);
        assert_eq!(cog_acceleration(&a, 0.0, 0.0, 0.7, &params), a);
    }

    #[test]
    fn pure_spin_gives_centripetal_term_toward_cog() {
        let params = PayloadParams::default();
        let a_p = cog_acceleration(&Vector3::zeros(), 1.0, 0.0, 0.0, &params);
        // c1 held still while the bar spins about it: the CoG accelerates toward c1
        assert!((a_p - Vector3::new(0.5, 0.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn zero_dt_rejected() {
        let m = VehicleMeasurement {
            position: Vector3::zeros(),
            velocity: Vector3::zeros(),
            attitude: UnitQuaternion::identity(),
            angular_velocity: Vector3::zeros(),
        };
        let mut f = VehicleFilter::new(1.5, &m, Vector3::zeros(), &Default::default(), SigmaConfig::default()).unwrap();
        assert_eq!(f.step(14.7, &m, 0.0), Err(EstimationError::NonPositiveDt(0.0)));
    }

    #[test]
    fn differentiator_tracks_a_ramp() {
        let mut d = RateDifferentiator::new(0.05);
        for k in 0..400 {
            d.update(2.0 * k as f64 * 0.01, 0.01);
        }
        assert!((d.value() - 2.0).abs() < 1e-9);
    }
}
