use super::EstimationError;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

/// Jitter levels tried in turn when the Cholesky factorization fails.
const JITTER: [f64; 7] = [0.0, 1e-12, 1e-11, 1e-10, 1e-9, 1e-8, 1e-6];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SigmaConfig {
    pub alpha: f64,
    pub beta: f64,
    pub kappa: f64,
}

impl Default for SigmaConfig {
    fn default() -> Self {
        Self { alpha: 0.1, beta: 2.0, kappa: 0.0 }
    }
}

impl SigmaConfig {
    pub fn lambda(&self, n: usize) -> f64 {
        self.alpha * self.alpha * (n as f64 + self.kappa) - n as f64
    }

    pub fn validate(&self, n: usize) -> Result<(), EstimationError> {
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(EstimationError::InvalidSigma("alpha must lie in (0, 1]"));
        }
        if n == 0 {
            return Err(EstimationError::InvalidSigma("state dimension must be at least 1"));
        }
        if self.lambda(n) <= -(n as f64) {
            return Err(EstimationError::InvalidSigma("lambda must exceed -n"));
        }
        Ok(())
    }

    /// Mean and covariance weights for the `2n + 1` sigma points.
    pub fn weights(&self, n: usize) -> (Vec<f64>, Vec<f64>) {
        let lambda = self.lambda(n);
        let c = n as f64 + lambda;
        let mut wm = vec![0.5 / c; 2 * n + 1];
        let mut wc = wm.clone();
        wm[0] = lambda / c;
        wc[0] = lambda / c + (1.0 - self.alpha * self.alpha + self.beta);
        (wm, wc)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianBelief {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
}

impl GaussianBelief {
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self, EstimationError> {
        let n = mean.len();
        if cov.nrows() != n || cov.ncols() != n {
            return Err(EstimationError::Dimension { expected: n, got: cov.nrows() });
        }
        let mut b = Self { mean, cov };
        b.symmetrize();
        Ok(b)
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn symmetrize(&mut self) {
        let t = self.cov.transpose();
        self.cov = (&self.cov + t) * 0.5;
    }

    pub fn is_finite(&self) -> bool {
        self.mean.iter().chain(self.cov.iter()).all(|x| x.is_finite())
    }

    /// Sigma points `mean`, `mean ± columns of sqrt((n + lambda) P)`.
    pub fn sigma_points(&self, cfg: &SigmaConfig) -> Result<Vec<DVector<f64>>, EstimationError> {
        let n = self.dim();
        cfg.validate(n)?;
        let scaled = &self.cov * (n as f64 + cfg.lambda(n));
        let l = cholesky_with_jitter(&scaled)?;
        let mut pts = Vec::with_capacity(2 * n + 1);
        pts.push(self.mean.clone());
        for j in 0..n {
            pts.push(&self.mean + l.column(j));
        }
        for j in 0..n {
            pts.push(&self.mean - l.column(j));
        }
        Ok(pts)
    }
}

fn cholesky_with_jitter(m: &DMatrix<f64>) -> Result<DMatrix<f64>, EstimationError> {
    let n = m.nrows();
    for j in JITTER {
        let a = m + DMatrix::<f64>::identity(n, n) * j;
        if let Some(c) = a.cholesky() {
            return Ok(c.l());
        }
    }
    Err(EstimationError::SqrtFailure)
}

fn weighted_mean(points: &[DVector<f64>], wm: &[f64]) -> DVector<f64> {
    let mut mean = DVector::zeros(points[0].len());
    for (p, w) in points.iter().zip(wm) {
        mean.axpy(*w, p, 1.0);
    }
    mean
}

/// Unscented prediction with additive process noise `q`.
pub fn ukf_predict<F>(belief: &GaussianBelief, process: F, q: &DMatrix<f64>, cfg: &SigmaConfig) -> Result<GaussianBelief, EstimationError>
where
    F: Fn(&DVector<f64>) -> DVector<f64>,
{
    let n = belief.dim();
    if q.nrows() != n || q.ncols() != n {
        return Err(EstimationError::Dimension { expected: n, got: q.nrows() });
    }
    let (wm, wc) = cfg.weights(n);
    let propagated: Vec<_> = belief.sigma_points(cfg)?.iter().map(&process).collect();
    if propagated.iter().any(|p| p.len() != n) {
        return Err(EstimationError::Dimension { expected: n, got: propagated[0].len() });
    }
    let mean = weighted_mean(&propagated, &wm);
    let mut cov = q.clone();
    for (p, w) in propagated.iter().zip(&wc) {
        let d = p - &mean;
        cov.ger(*w, &d, &d, 1.0);
    }
    let mut out = GaussianBelief { mean, cov };
    out.symmetrize();
    if !out.is_finite() {
        return Err(EstimationError::NonFinite);
    }
    Ok(out)
}

/// Unscented measurement update with additive measurement noise `r`.
pub fn ukf_update<H>(
    belief: &GaussianBelief,
    measure: H,
    r: &DMatrix<f64>,
    y: &DVector<f64>,
    cfg: &SigmaConfig,
) -> Result<GaussianBelief, EstimationError>
where
    H: Fn(&DVector<f64>) -> DVector<f64>,
{
    let n = belief.dim();
    let m = y.len();
    if r.nrows() != m || r.ncols() != m {
        return Err(EstimationError::Dimension { expected: m, got: r.nrows() });
    }
    let (wm, wc) = cfg.weights(n);
    let points = belief.sigma_points(cfg)?;
    let predicted: Vec<_> = points.iter().map(&measure).collect();
    if predicted.iter().any(|z| z.len() != m) {
        return Err(EstimationError::Dimension { expected: m, got: predicted[0].len() });
    }
    let z_mean = weighted_mean(&predicted, &wm);

    let mut s = r.clone();
    let mut pxz = DMatrix::zeros(n, m);
    for ((x, z), w) in points.iter().zip(&predicted).zip(&wc) {
        let dz = z - &z_mean;
        let dx = x - &belief.mean;
        s.ger(*w, &dz, &dz, 1.0);
        pxz.ger(*w, &dx, &dz, 1.0);
    }
    let s = (&s + s.transpose()) * 0.5;
    let chol = s.clone().cholesky().ok_or(EstimationError::InnovationSingular)?;
    // K = Pxz S^-1, solved as S K^T = Pxz^T
    let gain = chol.solve(&pxz.transpose()).transpose();

    let mean = &belief.mean + &gain * (y - z_mean);
    let cov = &belief.cov - &gain * s * gain.transpose();
    let mut out = GaussianBelief { mean, cov };
    out.symmetrize();
    if !out.is_finite() {
        return Err(EstimationError::NonFinite);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn belief(mean: &[f64], cov: DMatrix<f64>) -> GaussianBelief {
        GaussianBelief::new(DVector::from_column_slice(mean), cov).unwrap()
    }

    #[test]
    fn identity_process_without_noise_is_a_no_op() {
        let cov = DMatrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 1.0]);
        let b = belief(&[1.0, -2.0], cov);
        let out = ukf_predict(&b, |x| x.clone(), &DMatrix::zeros(2, 2), &SigmaConfig::default()).unwrap();
        assert!((out.mean - &b.mean).amax() < 1e-12);
        assert!((out.cov - &b.cov).amax() < 1e-12);
    }

    #[test]
    fn scalar_random_walk_adds_exactly_q() {
        let b = belief(&[0.0], DMatrix::from_element(1, 1, 0.5));
        let q = DMatrix::from_element(1, 1, 0.1);
        let out = ukf_predict(&b, |x| x.clone(), &q, &SigmaConfig::default()).unwrap();
        assert!((out.cov[(0, 0)] - 0.6).abs() < 1e-12);
    }

    #[test]
    fn uninformative_measurement_leaves_prior() {
        let b = belief(&[1.0, 2.0], DMatrix::identity(2, 2));
        let r = DMatrix::identity(2, 2) * 1e12;
        let y = DVector::from_column_slice(&[50.0, -50.0]);
        let out = ukf_update(&b, |x| x.clone(), &r, &y, &SigmaConfig::default()).unwrap();
        assert!(((out.mean - &b.mean).amax()) / b.mean.amax() < 1e-6);
    }

    #[test]
    fn repeated_updates_converge_monotonically() {
        let mut b = belief(&[0.0], DMatrix::from_element(1, 1, 1.0));
        let r = DMatrix::from_element(1, 1, 0.5);
        let y = DVector::from_element(1, 3.0);
        let mut last = f64::INFINITY;
        for _ in 0..50 {
            b = ukf_update(&b, |x| x.clone(), &r, &y, &SigmaConfig::default()).unwrap();
            let err = (b.mean[0] - 3.0).abs();
            assert!(err < last);
            last = err;
        }
        assert!(last < 0.1);
    }

    #[test]
    fn non_psd_covariance_is_a_fault() {
        let b = GaussianBelief { mean: DVector::zeros(2), cov: DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]) };
        let r = ukf_predict(&b, |x| x.clone(), &DMatrix::zeros(2, 2), &SigmaConfig::default());
        assert_eq!(r, Err(EstimationError::SqrtFailure));
    }

    #[test]
    fn bad_alpha_rejected() {
        let cfg = SigmaConfig { alpha: 0.0, ..Default::default() };
        assert!(cfg.validate(3).is_err());
    }
}
