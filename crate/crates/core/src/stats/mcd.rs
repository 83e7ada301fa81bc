use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::StatsError;
use crate::scalar::Scalar;

/// Expected outlier fraction used when training (0.01 %).
pub const DEFAULT_CONTAMINATION: f64 = 1e-4;

/// Outcome of the one-dimensional minimum covariance determinant fit.
#[derive(Debug, Clone, PartialEq)]
pub struct McdResult<T> {
    /// `true` for retained samples, indexed like the input.
    pub inlier_mask: Vec<bool>,
    pub robust_mu: T,
    /// Consistency-corrected scale of the best h-subset.
    pub robust_sigma: T,
    /// Uncorrected standard deviation (n denominator) of the best h-subset.
    pub raw_sigma: T,
    pub contamination: f64,
    /// Input indices of the minimal-variance h-subset.
    pub support: Vec<usize>,
}

impl<T> McdResult<T> {
    pub fn outliers(&self) -> usize {
        self.inlier_mask.iter().filter(|&&k| !k).count()
    }
}

/// Number of samples flagged for `contamination` of `n`.
pub fn outlier_count(n: usize, contamination: f64) -> usize {
    if contamination <= 0.0 {
        return 0;
    }
    // tolerance keeps e.g. 1e-4 * 10_000 from rounding up to 2
    (contamination * n as f64 - 1e-9).ceil().max(0.0) as usize
}

/// Factor that makes the variance of the central `h/n` fraction of a normal
/// sample consistent for the full-population variance.
pub fn consistency_factor(h: usize, n: usize) -> f64 {
    let frac = h as f64 / n as f64;
    if frac >= 1.0 {
        return 1.0;
    }
    let q = ChiSquared::new(1.0).expect("dof 1").inverse_cdf(frac);
    frac / ChiSquared::new(3.0).expect("dof 3").cdf(q)
}

/// Exact one-dimensional MCD.
///
/// In one dimension the minimum-variance subset of size `h = ⌊(n+2)/2⌋` is a
/// contiguous run of the sorted sample, so every window is scanned once. The
/// `⌈contamination·n⌉` samples farthest from the robust location are flagged;
/// samples sitting exactly on the location are never flagged.
pub fn mcd_filter<T: Scalar>(gaps: &[T], contamination: f64) -> Result<McdResult<T>, StatsError> {
    let n = gaps.len();
    if n < 4 {
        return Err(StatsError::TooFewSamples { needed: 4, got: n });
    }
    if !(0.0..0.5).contains(&contamination) {
        return Err(StatsError::BadContamination(contamination));
    }
    if gaps.iter().any(|x| !x.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    let h = (n + 2) / 2;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| gaps[a].partial_cmp(&gaps[b]).expect("finite").then(a.cmp(&b)));
    let sorted: Vec<f64> = order.iter().map(|&i| gaps[i].f64()).collect();

    let best = best_window(&sorted, h);
    let support: Vec<usize> = order[best..best + h].to_vec();

    let window: Vec<T> = support.iter().map(|&i| gaps[i]).collect();
    let hh = T::of(h as f64);
    let (wmin, wmax) = (window[0], window[h - 1]);
    let mu = if wmin == wmax { wmin } else { (window.iter().copied().sum::<T>() / hh).max(wmin).min(wmax) };
    let var = window.iter().map(|&x| (x - mu) * (x - mu)).sum::<T>() / hh;
    let raw_sigma = var.sqrt();
    let robust_sigma = raw_sigma * T::of(consistency_factor(h, n).sqrt());

    let k = outlier_count(n, contamination);
    let mut by_distance: Vec<usize> = (0..n).collect();
    by_distance.sort_by(|&a, &b| {
        let da = (gaps[a] - mu).abs();
        let db = (gaps[b] - mu).abs();
        db.partial_cmp(&da).expect("finite").then(a.cmp(&b))
    });
    let mut inlier_mask = vec![true; n];
    for &i in by_distance.iter().take(k) {
        if (gaps[i] - mu).abs() > T::zero() {
            inlier_mask[i] = false;
        }
    }

    Ok(McdResult { inlier_mask, robust_mu: mu, robust_sigma, raw_sigma, contamination, support })
}

/// Start of the minimal-variance length-`h` window of `sorted`.
///
/// Prefix sums locate the candidates; windows within a relative 1e-9 of the
/// minimum are re-scored with a two-pass variance and the earliest wins ties.
fn best_window(sorted: &[f64], h: usize) -> usize {
    let n = sorted.len();
    let shift = sorted[n / 2];
    let mut s1 = vec![0.0f64; n + 1];
    let mut s2 = vec![0.0f64; n + 1];
    for (i, &x) in sorted.iter().enumerate() {
        let d = x - shift;
        s1[i + 1] = s1[i] + d;
        s2[i + 1] = s2[i] + d * d;
    }
    let hf = h as f64;
    let ss = |j: usize| {
        let a = s1[j + h] - s1[j];
        let b = s2[j + h] - s2[j];
        (b - a * a / hf).max(0.0)
    };
    let scores: Vec<f64> = (0..=n - h).map(ss).collect();
    let min = scores.iter().copied().fold(f64::INFINITY, f64::min);
    let slack = 1e-9 * min.max(f64::MIN_POSITIVE) + 1e-300;

    let two_pass = |j: usize| {
        let w = &sorted[j..j + h];
        let m = w.iter().sum::<f64>() / hf;
        w.iter().map(|x| (x - m) * (x - m)).sum::<f64>()
    };
    let mut best = usize::MAX;
    let mut best_ss = f64::INFINITY;
    for (j, &s) in scores.iter().enumerate() {
        if s <= min + slack {
            let exact = two_pass(j);
            if exact < best_ss {
                best_ss = exact;
                best = j;
            }
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_gross_outlier() {
        let gaps = [1.0f64, 1.0, 1.0, 1.0, 1.0, 1.0, 100.0];
        let r = mcd_filter(&gaps, 0.14).unwrap();
        assert_eq!(r.inlier_mask, vec![true, true, true, true, true, true, false]);
        assert_eq!(r.robust_mu, 1.0);
        assert_eq!(r.outliers(), 1);
    }

    #[test]
    fn all_equal_has_no_outliers() {
        let gaps = [0.1f64; 12];
        let r = mcd_filter(&gaps, 0.2).unwrap();
        assert_eq!(r.outliers(), 0);
        assert_eq!(r.robust_sigma, 0.0);
        assert_eq!(r.raw_sigma, 0.0);
    }

    #[test]
    fn errors() {
        assert_eq!(mcd_filter(&[1.0f64, 2.0, 3.0], 0.1), Err(StatsError::TooFewSamples { needed: 4, got: 3 }));
        assert_eq!(mcd_filter(&[1.0f64; 5], 0.5), Err(StatsError::BadContamination(0.5)));
        assert_eq!(mcd_filter(&[1.0f64; 5], -0.1), Err(StatsError::BadContamination(-0.1)));
    }

    #[test]
    fn outlier_count_rounding() {
        assert_eq!(outlier_count(10_000, 1e-4), 1);
        assert_eq!(outlier_count(10_001, 1e-4), 2);
        assert_eq!(outlier_count(15, 1e-4), 1);
        assert_eq!(outlier_count(15, 0.0), 0);
        assert_eq!(outlier_count(7, 0.14), 1);
    }

    #[test]
    fn consistency_factor_matches_reference() {
        // h/n = 1/2: (1/2) / F_chi2_3(Phi^-1(3/4)^2)
        let c = consistency_factor(50, 100);
        assert!((c - 7.010_074_539_703_252).abs() < 1e-9, "{c}");
        assert_eq!(consistency_factor(10, 10), 1.0);
    }

    #[test]
    fn works_in_f32() {
        let gaps = [1.0f32, 1.1, 0.9, 1.0, 50.0, 1.05, 0.95];
        let r = mcd_filter(&gaps, 0.1).unwrap();
        assert!(!r.inlier_mask[4]);
        assert_eq!(r.outliers(), 1);
    }
}
