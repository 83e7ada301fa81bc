//! Frame-at-a-time detector bank and batch drivers.

use std::collections::{BTreeSet, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    AlertEvent, DetectorConfig, Method, Score, Scorer, Sufficiency, SufficiencyRule, Trigger, UnscoredReason, Verdict,
};
use crate::frame::{Aid, CanFrame};
use crate::profile::ProfileView;
use crate::scalar::Scalar;

/// Frames that the timing profiles could not judge.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Coverage {
    pub frames: usize,
    pub unknown_aid: usize,
    pub degenerate: usize,
    pub unknown_aids: BTreeSet<Aid>,
}

impl Coverage {
    pub fn scored(&self) -> usize {
        self.frames - self.unknown_aid - self.degenerate
    }

    fn record(&mut self, aid: Aid, score_reason: Option<UnscoredReason>) {
        self.frames += 1;
        match score_reason {
            Some(UnscoredReason::UnknownAid) => {
                self.unknown_aid += 1;
                self.unknown_aids.insert(aid);
            }
            Some(UnscoredReason::Degenerate) => self.degenerate += 1,
            None => {}
        }
    }

    pub fn merge(&mut self, other: &Coverage) {
        self.frames += other.frames;
        self.unknown_aid += other.unknown_aid;
        self.degenerate += other.degenerate;
        self.unknown_aids.extend(other.unknown_aids.iter().copied());
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome<T> {
    pub verdict: Verdict,
    pub alert: Option<AlertEvent<T>>,
}

/// Streaming detector over any number of AIDs. Per-AID state is independent.
#[derive(Debug, Clone)]
pub struct DetectorBank<'p, T> {
    config: DetectorConfig,
    scorer: Scorer<'p, T>,
    state: HashMap<Aid, Sufficiency>,
    coverage: Coverage,
    next_index: usize,
}

/// Maps a score plus its sufficiency outcome to a verdict.
fn judge<T: Scalar>(
    score: &Score<T>,
    state: &mut Sufficiency,
    alpha: f64,
    rule: SufficiencyRule,
    strict: bool,
) -> (Verdict, Option<(Trigger<T>, usize)>) {
    match *score {
        Score::Unscored(UnscoredReason::UnknownAid) if strict => (Verdict::Malicious, Some((Trigger::UnknownAid, 0))),
        Score::Unscored(reason) => (Verdict::Unscored(reason), None),
        Score::Warmup => (Verdict::Benign, None),
        _ => match state.update(score, alpha, rule) {
            None => (Verdict::Benign, None),
            Some(count) => {
                let trigger = match *score {
                    Score::Gap { gap, .. } => Trigger::Gap(gap),
                    Score::Span { span, .. } => Trigger::Span(span),
                    Score::PValue { pv, .. } => Trigger::PValue(pv),
                    _ => unreachable!("handled above"),
                };
                (Verdict::Malicious, Some((trigger, count)))
            }
        },
    }
}

impl<'p, T: Scalar> DetectorBank<'p, T> {
    pub fn new(config: DetectorConfig, profiles: &ProfileView<'p, T>) -> Self {
        DetectorBank {
            config,
            scorer: Scorer::new(config.method, config.rule.window, profiles),
            state: HashMap::new(),
            coverage: Coverage::default(),
            next_index: 0,
        }
    }

    pub fn config(&self) -> &DetectorConfig {
        &self.config
    }

    pub fn coverage(&self) -> &Coverage {
        &self.coverage
    }

    /// Clears per-AID history and restarts frame numbering; coverage is kept.
    pub fn reset(&mut self) {
        self.scorer.reset();
        self.state.clear();
        self.next_index = 0;
    }

    /// Processes the next frame of the stream.
    pub fn step(&mut self, frame: &CanFrame) -> StepOutcome<T> {
        let index = self.next_index;
        self.next_index += 1;
        let score = self.scorer.score(frame);
        let reason = match score {
            Score::Unscored(r) => Some(r),
            _ => None,
        };
        self.coverage.record(frame.aid, reason);
        let state = self.state.entry(frame.aid).or_default();
        let (verdict, hit) = judge(&score, state, self.config.alpha, self.config.rule, self.config.strict_unknown_aid);
        let alert = hit.map(|(trigger, count)| AlertEvent {
            method: self.config.method,
            alpha: self.config.alpha,
            aid: frame.aid,
            frame_index: index,
            timestamp: frame.timestamp,
            trigger,
            count,
        });
        StepOutcome { verdict, alert }
    }
}

/// Output of one batch run.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectionRun<T> {
    pub verdicts: Vec<Verdict>,
    pub alerts: Vec<AlertEvent<T>>,
    pub coverage: Coverage,
}

/// Runs one detector over one time-ordered capture. Equivalent to feeding the
/// frames one by one into a fresh [`DetectorBank`].
pub fn run_detector<T: Scalar>(
    config: DetectorConfig,
    profiles: &ProfileView<'_, T>,
    frames: &[CanFrame],
) -> DetectionRun<T> {
    let mut bank = DetectorBank::new(config, profiles);
    let mut verdicts = Vec::with_capacity(frames.len());
    let mut alerts = Vec::new();
    for frame in frames {
        let out = bank.step(frame);
        verdicts.push(out.verdict);
        alerts.extend(out.alert);
    }
    DetectionRun { verdicts, alerts, coverage: bank.coverage }
}

/// Verdicts of one threshold over several captures.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRun {
    pub alpha: f64,
    /// One verdict vector per capture, parallel to the input frames.
    pub verdicts: Vec<Vec<Verdict>>,
}

/// Runs one method at every threshold in `alphas` over several captures.
///
/// Every frame is scored once; thresholds are then applied in parallel.
/// Detector state restarts at each capture. Returns the runs in `alphas`
/// order plus the (threshold-independent) coverage.
pub fn sweep<T: Scalar>(
    method: Method,
    alphas: &[f64],
    profiles: &ProfileView<'_, T>,
    captures: &[&[CanFrame]],
    rule: SufficiencyRule,
    strict_unknown_aid: bool,
) -> (Vec<SweepRun>, Coverage) {
    let mut coverage = Coverage::default();
    let scored: Vec<Vec<(Aid, Score<T>)>> = captures
        .iter()
        .map(|frames| {
            let mut scorer = Scorer::new(method, rule.window, profiles);
            frames
                .iter()
                .map(|f| {
                    let s = scorer.score(f);
                    coverage.record(f.aid, if let Score::Unscored(r) = s { Some(r) } else { None });
                    (f.aid, s)
                })
                .collect()
        })
        .collect();
    let runs = alphas
        .par_iter()
        .map(|&alpha| {
            let verdicts = scored
                .iter()
                .map(|capture| {
                    let mut state: HashMap<Aid, Sufficiency> = HashMap::new();
                    capture
                        .iter()
                        .map(|(aid, score)| {
                            judge(score, state.entry(*aid).or_default(), alpha, rule, strict_unknown_aid).0
                        })
                        .collect()
                })
                .collect();
            SweepRun { alpha, verdicts }
        })
        .collect();
    (runs, coverage)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::{fit_profile, AidProfile};
    use crate::stats::KdeConfig;

    fn profile(aid: u32, mu: f64) -> AidProfile<f64> {
        let gaps: Vec<f64> = (0..200).map(|k| mu + if k % 2 == 0 { mu / 20.0 } else { -mu / 20.0 }).collect();
        fit_profile(Aid(aid), &gaps, false, 0, KdeConfig { cap: 200, grid_size: 256 }).unwrap()
    }

    fn frames(times: &[f64], aid: u32) -> Vec<CanFrame> {
        times.iter().map(|&t| CanFrame::new(t, aid, &[]).unwrap()).collect()
    }

    #[test]
    fn empty_input() {
        let p = profile(1, 0.1);
        let view: ProfileView<f64> = [(Aid(1), &p)].into_iter().collect();
        let run = run_detector(DetectorConfig::new(Method::Binning, 3.5).unwrap(), &view, &[]);
        assert!(run.alerts.is_empty() && run.verdicts.is_empty());
    }

    #[test]
    fn binning_examples() {
        let p = profile(1, 0.1);
        let view: ProfileView<f64> = [(Aid(1), &p)].into_iter().collect();
        let cfg = DetectorConfig::new(Method::Binning, 3.5).unwrap();
        let ambient = run_detector(cfg, &view, &frames(&[0.0, 0.1, 0.2, 0.3, 0.4, 0.5], 1));
        assert!(ambient.alerts.is_empty());
        let fast = run_detector(cfg, &view, &frames(&[0.0, 0.06, 0.12, 0.18, 0.24, 0.30], 1));
        assert_eq!(fast.alerts.len(), 1);
        assert_eq!(fast.alerts[0].frame_index, 5);
        assert_eq!(fast.verdicts[..5], [Verdict::Benign; 5]);
    }

    #[test]
    fn mean_flam_alerts_on_injections_after_the_third() {
        let p = profile(0xD0, 0.010);
        let view: ProfileView<f64> = [(Aid(0xD0), &p)].into_iter().collect();
        let mut times = Vec::new();
        for k in 0..40 {
            let t = k as f64 * 0.010;
            times.push(t);
            if k >= 10 {
                times.push(t + 0.001);
            }
        }
        let fs = frames(&times, 0xD0);
        let run = run_detector(DetectorConfig::new(Method::Mean, 0.44).unwrap(), &view, &fs);
        let injected: Vec<usize> = (0..fs.len()).filter(|&i| i > 10 && (i - 10) % 2 == 1).collect();
        let alerted: Vec<usize> = run.alerts.iter().map(|a| a.frame_index).collect();
        assert_eq!(alerted, injected[2..].to_vec());
    }

    #[test]
    fn unknown_aids_and_strict_mode() {
        let p = profile(1, 0.1);
        let view: ProfileView<f64> = [(Aid(1), &p)].into_iter().collect();
        let fs = frames(&[0.0, 0.01], 0x7FF);
        let cfg = DetectorConfig::new(Method::Kde, 0.05).unwrap();
        let lax = run_detector(cfg, &view, &fs);
        assert_eq!(lax.verdicts, vec![Verdict::Unscored(UnscoredReason::UnknownAid); 2]);
        assert_eq!(lax.coverage.unknown_aid, 2);
        assert!(lax.coverage.unknown_aids.contains(&Aid(0x7FF)));
        let strict = run_detector(cfg.with_strict_unknown_aid(true), &view, &fs);
        assert_eq!(strict.alerts.len(), 2);
        assert_eq!(strict.alerts[0].trigger, Trigger::UnknownAid);
    }

    #[test]
    fn degenerate_profiles_never_alert() {
        let p = fit_profile(Aid(2), &[0.1f64; 10], false, 0, KdeConfig::default()).unwrap();
        let view: ProfileView<f64> = [(Aid(2), &p)].into_iter().collect();
        let fs = frames(&[0.0, 0.001, 0.002, 0.003, 0.004], 2);
        for m in [Method::Gaussian, Method::Kde] {
            let run = run_detector(DetectorConfig::new(m, 0.09).unwrap(), &view, &fs);
            assert!(run.alerts.is_empty());
            assert_eq!(run.coverage.degenerate, 5);
        }
        let run = run_detector(DetectorConfig::new(Method::Mean, 0.5).unwrap(), &view, &fs);
        assert_eq!(run.alerts.len(), 2);
    }

    #[test]
    fn sweep_matches_bank() {
        let p1 = profile(1, 0.01);
        let p2 = profile(2, 0.05);
        let view: ProfileView<f64> = [(Aid(1), &p1), (Aid(2), &p2)].into_iter().collect();
        let mut fs = Vec::new();
        let mut t = 0.0;
        for k in 0..3_000u32 {
            t += 0.0005 + f64::from(k * 7919 % 13) * 0.0007;
            fs.push(CanFrame::new(t, 1 + k % 3, &[]).unwrap());
        }
        let halves: [&[CanFrame]; 2] = [&fs[..1_700], &fs[1_700..]];
        for m in Method::ALL {
            let grid = m.grid();
            let (runs, cov) = sweep(m, &grid, &view, &halves, SufficiencyRule::default(), false);
            assert_eq!(cov.frames, fs.len());
            for run in &runs {
                for (half, verdicts) in halves.iter().zip(&run.verdicts) {
                    let direct = run_detector(DetectorConfig::new(m, run.alpha).unwrap(), &view, half);
                    assert_eq!(&direct.verdicts, verdicts, "{m} {}", run.alpha);
                }
            }
        }
    }
}
