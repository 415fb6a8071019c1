//! Small statistics toolkit: summary statistics, Kolmogorov–Smirnov testing
//! and splittable seed derivation for parallel trials.

use serde::{Deserialize, Serialize};

/// SplitMix64 finalizer; the standard 64-bit mixing function.
pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E3779B97F4A7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

/// Per-trial seed derived from a master seed; trials are independent streams.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    splitmix64(master.wrapping_add(index.wrapping_mul(0x9E3779B97F4A7C15)))
}

/// Sample mean with its standard error. For a single observation the
/// standard error is undefined and reported as NaN.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct MeanSe {
    pub mean: f64,
    pub se: f64,
    pub n: usize,
}

impl MeanSe {
    pub fn from_samples(samples: &[f64]) -> MeanSe {
        let n = samples.len();
        assert!(n >= 1, "need at least one sample");
        let mean = samples.iter().sum::<f64>() / n as f64;
        if n == 1 {
            return MeanSe {
                mean,
                se: f64::NAN,
                n,
            };
        }
        let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
        MeanSe {
            mean,
            se: (var / n as f64).sqrt(),
            n,
        }
    }

    /// |mean − expected| measured in standard errors.
    pub fn sigmas_from(&self, expected: f64) -> f64 {
        (self.mean - expected).abs() / self.se
    }
}

/// Ratio of means with a delta-method standard error using the per-trial
/// covariance (numerator and denominator come from the same trials).
pub fn ratio_of_means(numerators: &[f64], denominators: &[f64]) -> (f64, f64) {
    assert_eq!(numerators.len(), denominators.len());
    let n = numerators.len() as f64;
    let num = MeanSe::from_samples(numerators);
    let den = MeanSe::from_samples(denominators);
    let ratio = num.mean / den.mean;
    if numerators.len() == 1 {
        return (ratio, f64::NAN);
    }
    let cov = numerators
        .iter()
        .zip(denominators)
        .map(|(x, y)| (x - num.mean) * (y - den.mean))
        .sum::<f64>()
        / (n - 1.0);
    let cov_of_means = cov / n;
    let var = (num.se.powi(2) - 2.0 * ratio * cov_of_means + ratio.powi(2) * den.se.powi(2))
        / den.mean.powi(2);
    (ratio, var.max(0.0).sqrt())
}

/// One-sample KS statistic against Uniform[a, b]. Sorts in place.
pub fn ks_statistic_uniform(samples: &mut [f64], a: f64, b: f64) -> f64 {
    assert!(!samples.is_empty());
    samples.sort_by(|x, y| x.total_cmp(y));
    let n = samples.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in samples.iter().enumerate() {
        let f = ((x - a) / (b - a)).clamp(0.0, 1.0);
        d = d.max(((i + 1) as f64 / n - f).abs());
        d = d.max((f - i as f64 / n).abs());
    }
    d
}

/// Asymptotic Kolmogorov survival function Q(x) = 2 Σ (−1)^{k−1} e^{−2k²x²}.
pub fn kolmogorov_survival(x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let term = (-2.0 * (k as f64).powi(2) * x * x).exp();
        if term < 1e-16 {
            break;
        }
        sum += if k % 2 == 1 { term } else { -term };
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// p-value of the one-sample KS statistic `d` on `n` samples.
pub fn ks_pvalue(n: usize, d: f64) -> f64 {
    kolmogorov_survival((n as f64).sqrt() * d)
}
