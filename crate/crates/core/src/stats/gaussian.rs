use serde::{Deserialize, Serialize};

use super::moments;
use crate::error::StatsError;
use crate::scalar::Scalar;

/// Normal fit to a gap set: sample mean and sample standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct GaussianFit<T> {
    pub mu: T,
    pub sigma: T,
}

pub fn fit_gaussian<T: Scalar>(gaps: &[T]) -> Result<GaussianFit<T>, StatsError> {
    let m = moments(gaps)?;
    if m.sd <= T::zero() {
        return Err(StatsError::DegenerateSigma);
    }
    Ok(GaussianFit { mu: m.mean, sigma: m.sd })
}

/// Two-sided p-value under the fitted normal: `2·(1 − Φ(|x − μ|/σ))`.
///
/// Gaussian sublevel sets are the two symmetric tails, so this is the exact
/// mass of `{t : f(t) ≤ f(x)}`.
pub fn gaussian_pvalue<T: Scalar>(fit: &GaussianFit<T>, x: T) -> Result<T, StatsError> {
    if !(fit.sigma > T::zero()) {
        return Err(StatsError::DegenerateSigma);
    }
    let z = (x - fit.mu).abs() / fit.sigma;
    Ok((z / T::of(std::f64::consts::SQRT_2)).erfc().min(T::one()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degenerate() {
        assert_eq!(fit_gaussian(&[0.1f64, 0.1, 0.1]), Err(StatsError::DegenerateSigma));
        let fit = GaussianFit { mu: 0.1f64, sigma: 0.0 };
        assert_eq!(gaussian_pvalue(&fit, 0.1), Err(StatsError::DegenerateSigma));
    }

    #[test]
    fn reference_points() {
        let fit = GaussianFit { mu: 0.01f64, sigma: 0.001 };
        assert_eq!(gaussian_pvalue(&fit, 0.01).unwrap(), 1.0);
        let p = gaussian_pvalue(&fit, 0.01 + 1.959_964 * 0.001).unwrap();
        assert!((p - 0.05).abs() < 1e-6, "{p}");
        let p = gaussian_pvalue(&fit, 0.01 - 1.959_964 * 0.001).unwrap();
        assert!((p - 0.05).abs() < 1e-6, "{p}");
    }

    #[test]
    fn tail_goes_to_zero_monotonically() {
        let fit = GaussianFit { mu: 0.0f64, sigma: 1.0 };
        let mut last = 1.0 + 1e-12;
        for i in 0..200 {
            let p = gaussian_pvalue(&fit, i as f64 * 0.25).unwrap();
            assert!(p < last || p == 0.0);
            last = p;
        }
        assert_eq!(gaussian_pvalue(&fit, 1e6).unwrap(), 0.0);
        assert_eq!(gaussian_pvalue(&fit, -1e6).unwrap(), 0.0);
    }

    #[test]
    fn f32_fit() {
        let fit = fit_gaussian(&[1.0f32, 2.0, 3.0]).unwrap();
        assert!((fit.mu - 2.0).abs() < 1e-6);
        assert!((fit.sigma - 1.0).abs() < 1e-6);
        assert!((gaussian_pvalue(&fit, 2.0).unwrap() - 1.0).abs() < 1e-6);
    }
}
