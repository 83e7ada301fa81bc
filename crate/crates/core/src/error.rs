use thiserror::Error;

/// Failures while reading CAN captures and their side files.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum CanError {
    #[error("line {line}: malformed frame: {reason}")]
    MalformedLine { line: usize, reason: String },
    #[error("attack metadata is missing field `{0}`")]
    MissingMetadata(&'static str),
    #[error("invalid attack metadata: {0}")]
    InvalidMetadata(String),
    #[error("invalid frame: {0}")]
    InvalidFrame(String),
    #[error("csv: {0}")]
    Csv(String),
}

/// Failures of the distribution estimators.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("zero spread: the fitted standard deviation is 0")]
    DegenerateSigma,
    #[error("contamination {0} outside [0, 0.5)")]
    BadContamination(f64),
    #[error("non-finite sample")]
    NonFinite,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("target AID {0} never appears in the ambient capture")]
    TargetAidAbsent(String),
    #[error("invalid bus spec: {0}")]
    InvalidBus(String),
    #[error("invalid attack spec: {0}")]
    InvalidAttack(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("{verdicts} verdicts but {labels} labels")]
    LengthMismatch { verdicts: usize, labels: usize },
    #[error("verdict csv line {line}: {reason}")]
    BadVerdictRow { line: usize, reason: String },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("alpha {alpha} is outside the admissible range for {method}")]
    AlphaOutOfRange { method: &'static str, alpha: f64 },
    #[error("unknown detection method `{0}`")]
    UnknownMethod(String),
    #[error("unknown outlier mode `{0}`")]
    UnknownOutlierMode(String),
    #[error("sufficiency rule needs 0 < required ({required}) <= window ({window}) <= 64")]
    InvalidRule { window: usize, required: usize },
}

/// Profile file problems.
#[derive(Debug, Error)]
pub enum ProfileError {
    #[error("profile json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported profile format version {0}")]
    Version(u32),
    #[error("no usable training gaps in the supplied captures")]
    NoTrainingData,
}
