//! Threshold and repetition stage.

use super::{Score, SufficiencyRule};
use crate::scalar::Scalar;

/// Per-AID repetition state for one threshold.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Sufficiency {
    /// Suspicion flags of the most recent gaps, newest in bit 0.
    flags: u64,
    /// Current run of consecutive suspicious p-values.
    run: usize,
}

impl Sufficiency {
    /// Applies `alpha` to one score. Returns the count at trigger when the
    /// frame is malicious.
    ///
    /// * Gap: suspicious iff `gap ≤ α·μ`; alert iff this gap is suspicious and
    ///   at least `required` of the last `window` gaps are (fewer gaps than
    ///   `window` may already suffice).
    /// * Span: alert iff `span < α·μ`.
    /// * PValue: suspicious iff `pv ≤ α`; alert iff the last `required` gaps
    ///   are all suspicious.
    pub fn update<T: Scalar>(&mut self, score: &Score<T>, alpha: f64, rule: SufficiencyRule) -> Option<usize> {
        let a = T::of(alpha);
        match *score {
            Score::Gap { gap, mu } => {
                let suspicious = gap <= a * mu;
                let mask = if rule.window >= 64 { u64::MAX } else { (1u64 << rule.window) - 1 };
                self.flags = ((self.flags << 1) | suspicious as u64) & mask;
                let count = self.flags.count_ones() as usize;
                (suspicious && count >= rule.required).then_some(count)
            }
            Score::Span { span, mu } => (span < a * mu).then_some(rule.window),
            Score::PValue { pv, .. } => {
                self.run = if pv <= a { self.run + 1 } else { 0 };
                (self.run >= rule.required).then_some(self.run)
            }
            Score::Warmup | Score::Unscored(_) => None,
        }
    }
}
