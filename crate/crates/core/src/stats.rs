//! Time-series estimates for Markov chain output.

use alloc::vec::Vec;

/// A Monte Carlo estimate with its autocorrelation-corrected standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub std_error: f64,
    /// Integrated autocorrelation time in units of samples (`1/2` for
    /// independent samples).
    pub tau_int: f64,
    pub n_samples: usize,
}

impl Estimate {
    /// Estimate from a correlated series.
    ///
    /// `tau_int` is the larger of the self-consistent windowed estimate and
    /// the one implied by batch means, which guards against windows that
    /// stop too early on slowly mixing chains.
    pub fn from_series(xs: &[f64]) -> Self {
        let n = xs.len();
        if n == 0 {
            return Self {
                mean: f64::NAN,
                std_error: f64::INFINITY,
                tau_int: f64::NAN,
                n_samples: 0,
            };
        }
        let (mean, var) = mean_and_variance(xs);
        if var == 0.0 || n < 2 {
            return Self {
                mean,
                std_error: if n < 2 { f64::INFINITY } else { 0.0 },
                tau_int: 0.5,
                n_samples: n,
            };
        }
        let tau = integrated_autocorrelation(xs, 6.0)
            .max(batch_means_tau(xs, 32))
            .max(0.5);
        Self {
            mean,
            std_error: libm::sqrt(2.0 * tau * var / n as f64),
            tau_int: tau,
            n_samples: n,
        }
    }

    /// Combines independent replicas of the same quantity.
    ///
    /// The standard error is the larger of the propagated per-replica errors
    /// and the spread between replica means.
    pub fn pool(replicas: &[Estimate]) -> Self {
        let r = replicas.len();
        if r == 0 {
            return Self::from_series(&[]);
        }
        let means: Vec<f64> = replicas.iter().map(|e| e.mean).collect();
        let (mean, var) = mean_and_variance(&means);
        let propagated = libm::sqrt(
            replicas
                .iter()
                .map(|e| e.std_error * e.std_error)
                .sum::<f64>(),
        ) / r as f64;
        let spread = if r > 1 {
            libm::sqrt(var * r as f64 / (r - 1) as f64 / r as f64)
        } else {
            0.0
        };
        Self {
            mean,
            std_error: propagated.max(spread),
            tau_int: replicas.iter().map(|e| e.tau_int).sum::<f64>() / r as f64,
            n_samples: replicas.iter().map(|e| e.n_samples).sum(),
        }
    }
}

/// Mean and (biased, `1/n`) variance.
pub fn mean_and_variance(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, var)
}

/// Normalised autocovariance at lag `t`.
fn autocorrelation(xs: &[f64], mean: f64, var: f64, t: usize) -> f64 {
    let n = xs.len();
    let mut s = 0.0;
    for i in 0..n - t {
        s += (xs[i] - mean) * (xs[i + t] - mean);
    }
    s / ((n - t) as f64 * var)
}

/// Integrated autocorrelation time with automatic windowing: the smallest
/// window `W` with `W >= c τ(W)`.
pub fn integrated_autocorrelation(xs: &[f64], c: f64) -> f64 {
    let n = xs.len();
    let (mean, var) = mean_and_variance(xs);
    if n < 2 || var == 0.0 {
        return 0.5;
    }
    let mut tau = 0.5;
    for w in 1..n / 2 {
        tau += autocorrelation(xs, mean, var, w);
        if w as f64 >= c * tau {
            return tau.max(0.5);
        }
    }
    // Window never closed: the series is too short for its correlations.
    (n as f64 / 2.0).max(tau)
}

/// `τ` implied by the variance of `batches` batch means.
pub fn batch_means_tau(xs: &[f64], batches: usize) -> f64 {
    let n = xs.len();
    let size = n / batches.max(1);
    if size < 2 || batches < 2 {
        return 0.5;
    }
    let (_, var) = mean_and_variance(xs);
    if var == 0.0 {
        return 0.5;
    }
    let means: Vec<f64> = xs
        .chunks_exact(size)
        .take(batches)
        .map(|c| c.iter().sum::<f64>() / size as f64)
        .collect();
    let (_, bvar) = mean_and_variance(&means);
    let k = means.len() as f64;
    // Unbiased batch variance; var(batch mean) ≈ 2 τ var / size.
    0.5 * size as f64 * bvar * k / (k - 1.0) / var
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;

    fn ar1(phi: f64, n: usize, seed: u64) -> Vec<f64> {
        let mut rng = SplitMix64::new(seed);
        let mut x = 0.0;
        (0..n)
            .map(|_| {
                // Sum of uniforms is close enough to Gaussian noise here.
                let noise: f64 = (0..12).map(|_| rng.next_f64()).sum::<f64>() - 6.0;
                x = phi * x + noise;
                x
            })
            .collect()
    }

    #[test]
    fn independent_samples() {
        let xs = ar1(0.0, 20_000, 1);
        let e = Estimate::from_series(&xs);
        // Batch means can only raise τ; its noise is about 25% here.
        assert!(integrated_autocorrelation(&xs, 6.0) < 0.6);
        assert!(e.tau_int < 1.0, "{}", e.tau_int);
        let naive = 1.0 / (20_000f64).sqrt();
        assert!(e.std_error >= 0.95 * naive && e.std_error < 1.5 * naive);
    }

    #[test]
    fn ar1_autocorrelation_time() {
        // τ = (1 + φ) / (2 (1 - φ)) = 4.5 for φ = 0.8.
        let xs = ar1(0.8, 200_000, 2);
        let tau = integrated_autocorrelation(&xs, 6.0);
        assert!((tau - 4.5).abs() < 0.5, "{tau}");
        let bm = batch_means_tau(&xs, 32);
        assert!((bm - 4.5).abs() < 2.0, "{bm}");
    }

    #[test]
    fn constant_series() {
        let e = Estimate::from_series(&[0.25; 100]);
        assert_eq!((e.mean, e.std_error, e.tau_int), (0.25, 0.0, 0.5));
    }

    #[test]
    fn pooling() {
        let a = Estimate {
            mean: 1.0,
            std_error: 0.1,
            tau_int: 1.0,
            n_samples: 10,
        };
        let b = Estimate { mean: 1.0, ..a };
        let p = Estimate::pool(&[a, b]);
        assert_eq!(p.mean, 1.0);
        assert!((p.std_error - 0.1 / 2f64.sqrt()).abs() < 1e-12);
        assert_eq!(p.n_samples, 20);
        let c = Estimate { mean: 3.0, ..a };
        let q = Estimate::pool(&[a, c]);
        assert!((q.std_error - 1.0).abs() < 1e-12);
    }
}
