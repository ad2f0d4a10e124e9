use nalgebra::Vector3;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Independent random streams derived from one seed.
///
/// Each physical noise source draws from its own stream so that changing
/// one variance leaves the others' realizations untouched.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    LeaderDisturbance = 1,
    FollowerDisturbance = 2,
    LeaderSensors = 3,
    FollowerSensors = 4,
    PayloadImu = 5,
}

pub fn stream_rng(seed: u64, stream: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    rng
}

/// Adds zero-mean Gaussian noise of the given variance.
pub fn inject_noise(signal: f64, variance: f64, rng: &mut ChaCha8Rng) -> f64 {
    if variance <= 0.0 {
        return signal;
    }
    let z: f64 = StandardNormal.sample(rng);
    signal + variance.sqrt() * z
}

pub fn inject_noise3(signal: &Vector3<f64>, variance: f64, rng: &mut ChaCha8Rng) -> Vector3<f64> {
    signal.map(|s| inject_noise(s, variance, rng))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_variance_is_identity() {
        let mut rng = stream_rng(1, Stream::PayloadImu);
        assert_eq!(inject_noise(0.37, 0.0, &mut rng), 0.37);
    }

    #[test]
    fn sample_mean_is_near_zero() {
        let mut rng = stream_rng(7, Stream::LeaderSensors);
        let n = 100_000;
        let var = 2.0;
        let mean: f64 = (0..n).map(|_| inject_noise(0.0, var, &mut rng)).sum::<f64>() / n as f64;
        assert!(mean.abs() < 4.0 * var.sqrt() / (n as f64).sqrt());
    }

    #[test]
    fn same_seed_same_stream() {
        let a: Vec<f64> = {
            let mut r = stream_rng(3, Stream::FollowerSensors);
            (0..10).map(|_| inject_noise(0.0, 1.0, &mut r)).collect()
        };
        let b: Vec<f64> = {
            let mut r = stream_rng(3, Stream::FollowerSensors);
            (0..10).map(|_| inject_noise(0.0, 1.0, &mut r)).collect()
        };
        assert_eq!(a, b);
        let mut other = stream_rng(3, Stream::LeaderSensors);
        assert_ne!(a[0], inject_noise(0.0, 1.0, &mut other));
    }
}
