//! Per-AID distribution estimators and two-sided p-values.
//!
//! The two-sided p-value of a sample `x` under density `f` is the probability
//! mass of the region where `f` is no larger than `f(x)`.

mod gaussian;
mod kde;
mod mcd;

pub use gaussian::{fit_gaussian, gaussian_pvalue, GaussianFit};
pub use kde::{fit_kde, kde_pvalue, KdeConfig, KdeModel, DEFAULT_GRID_SIZE, DEFAULT_KDE_CAP};
pub use mcd::{consistency_factor, mcd_filter, outlier_count, McdResult, DEFAULT_CONTAMINATION};

use crate::error::StatsError;
use crate::scalar::Scalar;

/// Sample moments and extrema of a gap set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments<T> {
    pub n: usize,
    pub mean: T,
    /// Sample standard deviation (n − 1 denominator).
    pub sd: T,
    pub min: T,
    pub max: T,
}

pub fn moments<T: Scalar>(xs: &[T]) -> Result<Moments<T>, StatsError> {
    if xs.len() < 2 {
        return Err(StatsError::TooFewSamples { needed: 2, got: xs.len() });
    }
    if xs.iter().any(|x| !x.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    let n = T::of(xs.len() as f64);
    let (min, max) = xs.iter().fold((T::infinity(), T::neg_infinity()), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    if min == max {
        return Ok(Moments { n: xs.len(), mean: min, sd: T::zero(), min, max });
    }
    // clamp guards the last-ulp drift of the mean for near-constant data
    let mean = (xs.iter().copied().sum::<T>() / n).max(min).min(max);
    let ss = xs.iter().map(|&x| (x - mean) * (x - mean)).sum::<T>();
    Ok(Moments { n: xs.len(), mean, sd: (ss / (n - T::one())).sqrt(), min, max })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn moments_basic() {
        let m = moments(&[1.0f64, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(m.mean, 2.5);
        assert!((m.sd - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert_eq!((m.min, m.max), (1.0, 4.0));
        assert!(moments::<f64>(&[1.0]).is_err());
        assert_eq!(moments(&[1.0f64, f64::NAN]), Err(StatsError::NonFinite));
    }

    #[test]
    fn constant_data_keeps_mean_inside_range() {
        let xs = vec![0.1f64; 1001];
        let m = moments(&xs).unwrap();
        assert!(m.min <= m.mean && m.mean <= m.max);
    }
}
