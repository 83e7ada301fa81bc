//! First-alert detection latency per attack.

use serde::{Deserialize, Serialize};

use super::LogTruth;

/// Ground-truth attack window of one capture.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttackInterval {
    pub log: usize,
    pub start: f64,
    pub end: f64,
}

/// One attack window per capture that has positives: from the first to the
/// last positive message.
pub fn attack_intervals(logs: &[LogTruth]) -> Vec<AttackInterval> {
    logs.iter()
        .enumerate()
        .filter_map(|(log, truth)| {
            let mut pos = truth.labels.iter().zip(&truth.timestamps).filter(|(&l, _)| l).map(|(_, &t)| t);
            let first = pos.next()?;
            let (lo, hi) = pos.fold((first, first), |(lo, hi), t| (lo.min(t), hi.max(t)));
            Some(AttackInterval { log, start: lo, end: hi })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatencyEntry {
    pub log: usize,
    pub start: f64,
    pub end: f64,
    /// Timestamp of the first true-positive alert, if any.
    pub first_alert: Option<f64>,
    /// Seconds from the interval start; `None` for a missed attack.
    pub latency: Option<f64>,
}

/// Latency of the first true-positive alert inside each interval.
///
/// `true_alerts` lists `(log, timestamp)` of alerts raised on positive messages.
pub fn latency_report(intervals: &[AttackInterval], true_alerts: &[(usize, f64)]) -> Vec<LatencyEntry> {
    intervals
        .iter()
        .map(|iv| {
            let first_alert = true_alerts
                .iter()
                .filter(|&&(log, t)| log == iv.log && t >= iv.start && t <= iv.end)
                .map(|&(_, t)| t)
                .reduce(f64::min);
            LatencyEntry {
                log: iv.log,
                start: iv.start,
                end: iv.end,
                first_alert,
                latency: first_alert.map(|t| t - iv.start),
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatencyStats {
    pub attacks: usize,
    pub detected: usize,
    pub missed: usize,
    pub mean: Option<f64>,
    pub median: Option<f64>,
    pub max: Option<f64>,
}

impl LatencyStats {
    pub fn from_entries(entries: &[LatencyEntry]) -> Self {
        let mut lat: Vec<f64> = entries.iter().filter_map(|e| e.latency).collect();
        lat.sort_by(f64::total_cmp);
        let n = lat.len();
        let median = match n {
            0 => None,
            _ if n % 2 == 1 => Some(lat[n / 2]),
            _ => Some(0.5 * (lat[n / 2 - 1] + lat[n / 2])),
        };
        LatencyStats {
            attacks: entries.len(),
            detected: n,
            missed: entries.len() - n,
            mean: (n > 0).then(|| lat.iter().sum::<f64>() / n as f64),
            median,
            max: lat.last().copied(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn latency_cases() {
        let iv = [AttackInterval { log: 0, start: 10.0, end: 20.0 }, AttackInterval { log: 1, start: 5.0, end: 6.0 }];
        let e = latency_report(&iv, &[(0, 10.0), (0, 12.0), (1, 7.0)]);
        assert_eq!(e[0].latency, Some(0.0));
        assert_eq!(e[1].latency, None);
        let s = LatencyStats::from_entries(&e);
        assert_eq!((s.attacks, s.detected, s.missed), (2, 1, 1));
        assert_eq!(s.max, Some(0.0));
    }

    #[test]
    fn intervals_from_labels() {
        let logs = vec![
            LogTruth { timestamps: vec![1.0, 2.0, 3.0, 4.0], aids: vec![], labels: vec![false, true, false, true] },
            LogTruth { timestamps: vec![1.0], aids: vec![], labels: vec![false] },
        ];
        assert_eq!(attack_intervals(&logs), vec![AttackInterval { log: 0, start: 2.0, end: 4.0 }]);
    }
}
