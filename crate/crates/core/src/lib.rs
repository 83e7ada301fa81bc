//! Timing-based intrusion detection for CAN buses.
//!
//! Frames are parsed from candump logs, per-AID inter-arrival gaps are
//! profiled from benign traffic (mean/spread, Gaussian fit, grid-tabulated
//! KDE, optionally after MCD outlier removal), and four detectors flag
//! messages whose timing is too fast: Mean, Binning, Gaussian and KDE.
//! The statistics and detectors are generic over `f32`/`f64`; the aliases
//! below fix the scalar type.

// `!(x > 0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod candump;
pub mod detect;
pub mod error;
pub mod eval;
pub mod frame;
pub mod gaps;
pub mod labels;
pub mod profile;
pub mod road;
pub mod scalar;
pub mod sim;
pub mod stats;
pub mod stream;

pub use detect::{latency_bound, run_detector, DetectorConfig, Method, SufficiencyRule, Verdict};
pub use error::{CanError, ConfigError, EvalError, ProfileError, SimError, StatsError};
pub use frame::{Aid, CanFrame, LabeledFrame};
pub use profile::{train, OutlierMode, TrainingConfig, Variant};
pub use scalar::Scalar;

pub type AidProfileF64 = profile::AidProfile<f64>;
pub type AidProfileF32 = profile::AidProfile<f32>;
pub type ProfileSetF64 = profile::ProfileSet<f64>;
pub type ProfileSetF32 = profile::ProfileSet<f32>;
pub type GaussianFitF64 = stats::GaussianFit<f64>;
pub type GaussianFitF32 = stats::GaussianFit<f32>;
pub type KdeModelF64 = stats::KdeModel<f64>;
pub type KdeModelF32 = stats::KdeModel<f32>;
pub type DetectorBankF64<'p> = detect::DetectorBank<'p, f64>;
pub type DetectorBankF32<'p> = detect::DetectorBank<'p, f32>;
pub type AlertEventF64 = detect::AlertEvent<f64>;
pub type AlertEventF32 = detect::AlertEvent<f32>;
