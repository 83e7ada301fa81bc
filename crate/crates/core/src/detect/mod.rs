//! Streaming per-AID timing detectors.
//!
//! Detection is split in two stages. A [`Scorer`] turns each arrival into a
//! threshold-free [`Score`] (a gap, a six-frame span or a p-value). A
//! [`Sufficiency`] tracker then applies the threshold and the repetition rule
//! (three of the last six gaps, or three consecutive gaps). The split lets a
//! threshold sweep score every frame once.

mod bank;
mod score;
mod sufficiency;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::ConfigError;
use crate::frame::Aid;

pub use bank::{run_detector, sweep, Coverage, DetectionRun, DetectorBank, StepOutcome, SweepRun};
pub use score::{Score, Scorer};
pub use sufficiency::Sufficiency;

/// Number of frames (Binning) or gaps (Mean) in the sliding window.
pub const WINDOW: usize = 6;
/// Suspicious gaps required inside the window, or consecutively for p-value methods.
pub const REQUIRED: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Mean,
    Binning,
    Gaussian,
    Kde,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Mean, Method::Binning, Method::Gaussian, Method::Kde];

    pub fn name(self) -> &'static str {
        match self {
            Method::Mean => "mean",
            Method::Binning => "binning",
            Method::Gaussian => "gaussian",
            Method::Kde => "kde",
        }
    }

    /// The method's 18-point threshold grid, ascending.
    pub fn grid(self) -> Vec<f64> {
        match self {
            Method::Mean => (1..=18).map(|i| i as f64 / 18.0).collect(),
            Method::Binning => (1..=18).map(|i| (2 + i) as f64 / 2.0).collect(),
            Method::Gaussian | Method::Kde => {
                let fine = (1..=9).map(|i| i as f64 / 1000.0);
                let coarse = (1..=9).map(|i| i as f64 / 100.0);
                fine.chain(coarse).collect()
            }
        }
    }

    pub fn uses_pvalue(self) -> bool {
        matches!(self, Method::Gaussian | Method::Kde)
    }

    /// Range check. Mean and p-value thresholds live in (0, 1]; the Binning
    /// multiplier only needs to be positive.
    pub fn check_alpha(self, alpha: f64) -> Result<(), ConfigError> {
        let ok = alpha.is_finite()
            && alpha > 0.0
            && match self {
                Method::Binning => true,
                _ => alpha <= 1.0,
            };
        if ok {
            Ok(())
        } else {
            Err(ConfigError::AlphaOutOfRange { method: self.name(), alpha })
        }
    }

    /// Whether `alpha` is one of the grid values (within 1e-12).
    pub fn on_grid(self, alpha: f64) -> bool {
        self.grid().iter().any(|&a| (a - alpha).abs() <= 1e-12)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "mean" => Ok(Method::Mean),
            "binning" => Ok(Method::Binning),
            "gaussian" => Ok(Method::Gaussian),
            "kde" => Ok(Method::Kde),
            _ => Err(ConfigError::UnknownMethod(s.to_owned())),
        }
    }
}

/// Window and repetition constants. The defaults are the supported setting;
/// other values exist for experiments only.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SufficiencyRule {
    pub window: usize,
    pub required: usize,
}

impl Default for SufficiencyRule {
    fn default() -> Self {
        SufficiencyRule { window: WINDOW, required: REQUIRED }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorConfig {
    pub method: Method,
    pub alpha: f64,
    pub rule: SufficiencyRule,
    /// Alert on every frame whose AID has no profile.
    pub strict_unknown_aid: bool,
}

impl DetectorConfig {
    pub fn new(method: Method, alpha: f64) -> Result<Self, ConfigError> {
        method.check_alpha(alpha)?;
        Ok(DetectorConfig { method, alpha, rule: SufficiencyRule::default(), strict_unknown_aid: false })
    }

    pub fn with_strict_unknown_aid(mut self, strict: bool) -> Self {
        self.strict_unknown_aid = strict;
        self
    }

    pub fn with_rule(mut self, rule: SufficiencyRule) -> Result<Self, ConfigError> {
        if rule.required == 0 || rule.required > rule.window || rule.window > 64 {
            return Err(ConfigError::InvalidRule { window: rule.window, required: rule.required });
        }
        self.rule = rule;
        Ok(self)
    }
}

/// Why a frame was not scored.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UnscoredReason {
    UnknownAid,
    /// The profile cannot support the method (zero spread, no fit, μ = 0).
    Degenerate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Benign,
    Malicious,
    Unscored(UnscoredReason),
}

impl Verdict {
    pub fn is_alert(self) -> bool {
        self == Verdict::Malicious
    }
}

/// What completed the alert condition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "value")]
pub enum Trigger<T> {
    Gap(T),
    Span(T),
    PValue(T),
    UnknownAid,
}

/// One malicious verdict.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: crate::scalar::Scalar")]
pub struct AlertEvent<T> {
    pub method: Method,
    pub alpha: f64,
    pub aid: Aid,
    pub frame_index: usize,
    pub timestamp: f64,
    pub trigger: Trigger<T>,
    /// Suspicious gaps in the window (Mean), consecutive suspicious gaps
    /// (p-value methods), or frames in the window (Binning).
    pub count: usize,
}

/// Worst-case Binning detection delay, in multiples of μ, for a two-fold rate
/// increase: 0 for α ≥ 5, 2 for α ∈ [4, 5), 3 below.
pub fn latency_bound(alpha: f64) -> f64 {
    if alpha >= 5.0 {
        0.0
    } else if alpha >= 4.0 {
        2.0
    } else {
        3.0
    }
}
