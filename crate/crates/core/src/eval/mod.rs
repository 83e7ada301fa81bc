//! Per-message evaluation: confusion counts, precision/recall/F1, PR curves
//! and detection latency.
//!
//! Undefined ratios (0/0) are reported as 0.

mod latency;
mod report;

use serde::{Deserialize, Serialize};

use crate::detect::Method;
use crate::error::EvalError;

pub use latency::{attack_intervals, latency_report, AttackInterval, LatencyEntry, LatencyStats};
pub use report::{
    build_report, read_verdict_csv, verdict_row, write_verdict_csv, write_verdict_header, CurveReport, EvalInput,
    EvalReport, LogTruth, RunVerdicts, VerdictCode, REPORT_FORMAT_VERSION, VERDICT_CSV_HEADER,
};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
}

impl ConfusionCounts {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }

    pub fn positives(&self) -> u64 {
        self.tp + self.fn_
    }

    pub fn add(&mut self, predicted: bool, actual: bool) {
        match (predicted, actual) {
            (true, true) => self.tp += 1,
            (true, false) => self.fp += 1,
            (false, true) => self.fn_ += 1,
            (false, false) => self.tn += 1,
        }
    }

    pub fn merge(&mut self, other: &ConfusionCounts) {
        self.tp += other.tp;
        self.fp += other.fp;
        self.fn_ += other.fn_;
        self.tn += other.tn;
    }
}

/// Counts per-message outcomes; `predicted[i]` is true for a malicious verdict.
pub fn confusion(predicted: &[bool], labels: &[bool]) -> Result<ConfusionCounts, EvalError> {
    if predicted.len() != labels.len() {
        return Err(EvalError::LengthMismatch { verdicts: predicted.len(), labels: labels.len() });
    }
    let mut c = ConfusionCounts::default();
    for (&p, &l) in predicted.iter().zip(labels) {
        c.add(p, l);
    }
    Ok(c)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// F1 from precision and recall; 0 when both are 0.
pub fn f1_score(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

pub fn pr_metrics(c: &ConfusionCounts) -> PrMetrics {
    let precision = ratio(c.tp, c.tp + c.fp);
    let recall = ratio(c.tp, c.tp + c.fn_);
    PrMetrics { precision, recall, f1: f1_score(precision, recall) }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrPoint {
    pub alpha: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub counts: ConfusionCounts,
}

impl PrPoint {
    pub fn new(alpha: f64, counts: ConfusionCounts) -> Self {
        let m = pr_metrics(&counts);
        PrPoint { alpha, precision: m.precision, recall: m.recall, f1: m.f1, counts }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrCurve {
    pub method: Method,
    /// Sorted by recall, then precision descending, then alpha.
    pub points: Vec<PrPoint>,
    pub auc_pr: f64,
    /// Fraction of positive messages.
    pub baseline: f64,
    pub optimal_alpha: f64,
    pub optimal_f1: f64,
}

/// Trapezoidal area under sorted PR points, starting from
/// `(0, precision of the lowest-recall point)` and stopping at the largest
/// observed recall.
pub fn auc_pr(sorted: &[PrPoint]) -> f64 {
    let Some(first) = sorted.first() else {
        return 0.0;
    };
    let mut area = first.recall * first.precision;
    for w in sorted.windows(2) {
        area += (w[1].recall - w[0].recall) * 0.5 * (w[0].precision + w[1].precision);
    }
    area.clamp(0.0, 1.0)
}

fn sort_points(points: &mut [PrPoint]) {
    points.sort_by(|a, b| {
        a.recall.total_cmp(&b.recall).then(b.precision.total_cmp(&a.precision)).then(a.alpha.total_cmp(&b.alpha))
    });
}

/// Builds the PR curve of one method from one point per threshold.
/// The optimal threshold maximises F1, ties going to the smaller alpha.
pub fn pr_curve(method: Method, mut points: Vec<PrPoint>) -> PrCurve {
    sort_points(&mut points);
    let baseline = points.first().map_or(0.0, |p| ratio(p.counts.positives(), p.counts.total()));
    let best = points.iter().fold(None::<&PrPoint>, |best, p| match best {
        Some(b) if b.f1 > p.f1 || (b.f1 == p.f1 && b.alpha <= p.alpha) => Some(b),
        _ => Some(p),
    });
    let (optimal_alpha, optimal_f1) = best.map_or((f64::NAN, 0.0), |b| (b.alpha, b.f1));
    PrCurve { method, auc_pr: auc_pr(&points), points, baseline, optimal_alpha, optimal_f1 }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn counts(tp: u64, fp: u64, fn_: u64, tn: u64) -> ConfusionCounts {
        ConfusionCounts { tp, fp, fn_, tn }
    }

    #[test]
    fn confusion_basics() {
        let c = confusion(&[true, false, true, false], &[true, false, false, true]).unwrap();
        assert_eq!(c, counts(1, 1, 1, 1));
        assert!(matches!(confusion(&[true], &[]), Err(EvalError::LengthMismatch { verdicts: 1, labels: 0 })));
        let labels: Vec<bool> = (0..1000).map(|i| i % 25 == 0).collect();
        let none = confusion(&vec![false; 1000], &labels).unwrap();
        let m = pr_metrics(&none);
        assert_eq!((m.precision, m.recall, m.f1), (0.0, 0.0, 0.0));
    }

    #[test]
    fn metric_formulas() {
        let m = pr_metrics(&counts(1, 0, 0, 0));
        assert_eq!((m.precision, m.recall, m.f1), (1.0, 1.0, 1.0));
        assert!((f1_score(0.976, 0.996) - 0.986).abs() < 5e-4);
        assert!((f1_score(0.986, 0.992) - 0.989).abs() < 5e-4);
    }

    #[test]
    fn perfect_detector_area_is_one() {
        let pts: Vec<PrPoint> = (1..=18).map(|i| PrPoint::new(i as f64, counts(10, 0, 0, 90))).collect();
        let c = pr_curve(Method::Binning, pts);
        assert_eq!(c.auc_pr, 1.0);
        assert_eq!(c.baseline, 0.1);
        assert_eq!((c.optimal_alpha, c.optimal_f1), (1.0, 1.0));
    }

    #[test]
    fn area_ignores_input_order() {
        let pts = vec![
            PrPoint::new(0.1, counts(2, 1, 8, 89)),
            PrPoint::new(0.2, counts(5, 5, 5, 85)),
            PrPoint::new(0.3, counts(9, 30, 1, 60)),
            PrPoint::new(0.4, counts(5, 2, 5, 88)),
        ];
        let a = pr_curve(Method::Mean, pts.clone());
        let mut rev = pts;
        rev.reverse();
        let b = pr_curve(Method::Mean, rev);
        assert_eq!(a, b);
        // (0.2, 0.667) start, then (0.5, 0.714) [0.4 beats 0.2 on precision], (0.5, 0.5), (0.9, 0.231)
        let expect = 0.2 * (2.0 / 3.0) + 0.3 * 0.5 * (2.0 / 3.0 + 5.0 / 7.0) + 0.0 + 0.4 * 0.5 * (0.5 + 9.0 / 39.0);
        assert!((a.auc_pr - expect).abs() < 1e-12);
        assert_eq!(a.optimal_alpha, 0.4);
    }

    #[test]
    fn f1_ties_prefer_smaller_alpha() {
        let pts = vec![PrPoint::new(0.5, counts(5, 5, 5, 85)), PrPoint::new(0.3, counts(5, 5, 5, 85))];
        assert_eq!(pr_curve(Method::Mean, pts).optimal_alpha, 0.3);
    }
}
