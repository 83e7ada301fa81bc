//! Trained per-AID timing profiles and the profile file.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ConfigError, ProfileError, StatsError};
use crate::frame::{Aid, CanFrame};
use crate::gaps::{extract_gaps, GapTable};
use crate::scalar::Scalar;
use crate::stats::{
    fit_gaussian, fit_kde, mcd_filter, moments, GaussianFit, KdeConfig, KdeModel, DEFAULT_CONTAMINATION,
};

pub const PROFILE_FORMAT_VERSION: u32 = 1;
pub const BANDWIDTH_RULE: &str = "silverman";

/// Which training variants a profile file carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutlierMode {
    With,
    Without,
    Both,
}

impl OutlierMode {
    pub fn variants(self) -> &'static [Variant] {
        match self {
            OutlierMode::With => &[Variant::WithOutliers],
            OutlierMode::Without => &[Variant::WithoutOutliers],
            OutlierMode::Both => &[Variant::WithOutliers, Variant::WithoutOutliers],
        }
    }
}

impl FromStr for OutlierMode {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "with" => Ok(OutlierMode::With),
            "without" => Ok(OutlierMode::Without),
            "both" => Ok(OutlierMode::Both),
            _ => Err(ConfigError::UnknownOutlierMode(s.to_owned())),
        }
    }
}

impl fmt::Display for OutlierMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OutlierMode::With => "with",
            OutlierMode::Without => "without",
            OutlierMode::Both => "both",
        })
    }
}

/// One training variant: raw gaps, or gaps after MCD outlier removal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    WithOutliers,
    WithoutOutliers,
}

impl Variant {
    pub fn short(self) -> &'static str {
        match self {
            Variant::WithOutliers => "with",
            Variant::WithoutOutliers => "without",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short())
    }
}

impl FromStr for Variant {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "with" | "with_outliers" => Ok(Variant::WithOutliers),
            "without" | "without_outliers" => Ok(Variant::WithoutOutliers),
            _ => Err(ConfigError::UnknownOutlierMode(s.to_owned())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingConfig {
    pub contamination: f64,
    pub kde_cap: usize,
    pub grid_size: usize,
    pub bandwidth_rule: String,
    pub outliers: OutlierMode,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        let kde = KdeConfig::default();
        TrainingConfig {
            contamination: DEFAULT_CONTAMINATION,
            kde_cap: kde.cap,
            grid_size: kde.grid_size,
            bandwidth_rule: BANDWIDTH_RULE.to_owned(),
            outliers: OutlierMode::Both,
        }
    }
}

impl TrainingConfig {
    pub fn kde(&self) -> KdeConfig {
        KdeConfig { cap: self.kde_cap, grid_size: self.grid_size }
    }
}

/// Timing model of one AID for one training variant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct AidProfile<T> {
    pub aid: Aid,
    pub n_train: usize,
    pub mu: T,
    pub sigma: T,
    pub min: T,
    pub max: T,
    pub outliers_removed: bool,
    /// Gaps dropped by the MCD filter (0 for the raw variant).
    pub n_outliers: usize,
    /// `None` when the retained gaps have zero spread.
    pub gaussian: Option<GaussianFit<T>>,
    pub kde: Option<KdeModel<T>>,
}

/// Both variants of one AID; a variant is absent when it was not trained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct AidEntry<T> {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub with_outliers: Option<AidProfile<T>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub without_outliers: Option<AidProfile<T>>,
}

impl<T> AidEntry<T> {
    pub fn get(&self, variant: Variant) -> Option<&AidProfile<T>> {
        match variant {
            Variant::WithOutliers => self.with_outliers.as_ref(),
            Variant::WithoutOutliers => self.without_outliers.as_ref(),
        }
    }
}

/// Profile document of one vehicle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct ProfileSet<T> {
    pub format_version: u32,
    pub config: TrainingConfig,
    pub aids: BTreeMap<Aid, AidEntry<T>>,
}

/// Per-AID lookup for one variant, as consumed by the detectors.
pub type ProfileView<'a, T> = BTreeMap<Aid, &'a AidProfile<T>>;

/// Fits one variant from its gap set.
pub fn fit_profile<T: Scalar>(
    aid: Aid,
    gaps: &[T],
    outliers_removed: bool,
    n_outliers: usize,
    kde: KdeConfig,
) -> Result<AidProfile<T>, StatsError> {
    let m = moments(gaps)?;
    let gaussian = match fit_gaussian(gaps) {
        Ok(g) => Some(g),
        Err(StatsError::DegenerateSigma) => None,
        Err(e) => return Err(e),
    };
    let kde = match fit_kde(gaps, kde) {
        Ok(k) => Some(k),
        Err(StatsError::DegenerateSigma) => None,
        Err(e) => return Err(e),
    };
    Ok(AidProfile {
        aid,
        n_train: m.n,
        mu: m.mean,
        sigma: m.sd,
        min: m.min,
        max: m.max,
        outliers_removed,
        n_outliers,
        gaussian,
        kde,
    })
}

/// Trains both requested variants of one AID.
///
/// AIDs with fewer than 4 gaps cannot be MCD-filtered; their "without" variant
/// is the raw fit with `outliers_removed = false`.
pub fn train_aid<T: Scalar>(aid: Aid, gaps: &[f64], config: &TrainingConfig) -> Result<AidEntry<T>, StatsError> {
    let raw: Vec<T> = gaps.iter().map(|&g| T::of(g)).collect();
    let kde = config.kde();
    let want = config.outliers.variants();
    let with = if want.contains(&Variant::WithOutliers) { Some(fit_profile(aid, &raw, false, 0, kde)?) } else { None };
    let without = if want.contains(&Variant::WithoutOutliers) {
        Some(match mcd_filter(&raw, config.contamination) {
            Ok(mcd) => {
                let kept: Vec<T> = raw.iter().zip(&mcd.inlier_mask).filter(|(_, &k)| k).map(|(&x, _)| x).collect();
                let dropped = raw.len() - kept.len();
                fit_profile(aid, &kept, true, dropped, kde)?
            }
            Err(StatsError::TooFewSamples { .. }) => match &with {
                Some(p) => p.clone(),
                None => fit_profile(aid, &raw, false, 0, kde)?,
            },
            Err(e) => return Err(e),
        })
    } else {
        None
    };
    Ok(AidEntry { with_outliers: with, without_outliers: without })
}

/// Trains from per-capture gap tables (gaps never span two captures).
pub fn train_from_gaps<T: Scalar>(table: &GapTable, config: &TrainingConfig) -> Result<ProfileSet<T>, ProfileError> {
    if table.total_gaps() == 0 {
        return Err(ProfileError::NoTrainingData);
    }
    let fitted: Vec<(Aid, Result<AidEntry<T>, StatsError>)> =
        table.series.par_iter().map(|(&aid, s)| (aid, train_aid(aid, &s.gaps, config))).collect();
    let mut aids = BTreeMap::new();
    for (aid, res) in fitted {
        match res {
            Ok(entry) => {
                aids.insert(aid, entry);
            }
            Err(e) => log::warn!("AID {aid}: not profiled: {e}"),
        }
    }
    if aids.is_empty() {
        return Err(ProfileError::NoTrainingData);
    }
    Ok(ProfileSet { format_version: PROFILE_FORMAT_VERSION, config: config.clone(), aids })
}

/// Trains from a set of captures.
pub fn train<T: Scalar>(captures: &[Vec<CanFrame>], config: &TrainingConfig) -> Result<ProfileSet<T>, ProfileError> {
    let mut table = GapTable::default();
    for frames in captures {
        table.merge(extract_gaps(frames));
    }
    train_from_gaps(&table, config)
}

/// One line of the training summary table.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub aid: Aid,
    pub variant: Variant,
    pub n: usize,
    pub mu: f64,
    pub sigma: f64,
    pub min: f64,
    pub max: f64,
}

impl<T: Scalar> ProfileSet<T> {
    /// Profiles of one variant keyed by AID.
    pub fn select(&self, variant: Variant) -> ProfileView<'_, T> {
        self.aids.iter().filter_map(|(&aid, e)| e.get(variant).map(|p| (aid, p))).collect()
    }

    pub fn has_variant(&self, variant: Variant) -> bool {
        self.config.outliers.variants().contains(&variant)
    }

    pub fn get(&self, aid: Aid, variant: Variant) -> Option<&AidProfile<T>> {
        self.aids.get(&aid).and_then(|e| e.get(variant))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("profiles serialize")
    }

    pub fn from_json(text: &str) -> Result<Self, ProfileError> {
        #[derive(Deserialize)]
        struct Header {
            format_version: u32,
        }
        let header: Header = serde_json::from_str(text)?;
        if header.format_version != PROFILE_FORMAT_VERSION {
            return Err(ProfileError::Version(header.format_version));
        }
        Ok(serde_json::from_str(text)?)
    }

    pub fn summary(&self) -> Vec<SummaryRow> {
        let mut rows = Vec::new();
        for &variant in self.config.outliers.variants() {
            for (aid, p) in self.select(variant) {
                rows.push(SummaryRow {
                    aid,
                    variant,
                    n: p.n_train,
                    mu: p.mu.f64(),
                    sigma: p.sigma.f64(),
                    min: p.min.f64(),
                    max: p.max.f64(),
                });
            }
        }
        rows.sort_by_key(|r| (r.aid, r.variant));
        rows
    }

    /// Fixed-width text table of [`Self::summary`].
    pub fn summary_table(&self) -> String {
        let mut out = format!(
            "{:>8} {:>8} {:>9} {:>12} {:>12} {:>12} {:>12}\n",
            "aid", "variant", "n", "mu", "sigma", "min", "max"
        );
        for r in self.summary() {
            out.push_str(&format!(
                "{:>8} {:>8} {:>9} {:>12.6} {:>12.6} {:>12.6} {:>12.6}\n",
                r.aid.to_string(),
                r.variant.to_string(),
                r.n,
                r.mu,
                r.sigma,
                r.min,
                r.max
            ));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn periodic(aid: u32, period: f64, n: usize, spike_at: Option<usize>) -> Vec<CanFrame> {
        let mut t = 0.0;
        (0..n)
            .map(|k| {
                let wobble = if k % 2 == 0 { 1e-4 } else { -1e-4 };
                t += period + wobble + if Some(k) == spike_at { 5.0 } else { 0.0 };
                CanFrame::new(t, aid, &[0]).unwrap()
            })
            .collect()
    }

    fn small() -> TrainingConfig {
        TrainingConfig { kde_cap: 500, grid_size: 256, ..TrainingConfig::default() }
    }

    #[test]
    fn outlier_removal_shrinks_domain() {
        let frames = periodic(0xD0, 0.01, 2_000, Some(1_000));
        let set: ProfileSet<f64> = train(&[frames], &small()).unwrap();
        let with = set.get(Aid(0xD0), Variant::WithOutliers).unwrap();
        let without = set.get(Aid(0xD0), Variant::WithoutOutliers).unwrap();
        assert!(with.max > 5.0);
        assert!(without.max < 0.011);
        assert!(without.sigma < with.sigma);
        assert!(without.outliers_removed && !with.outliers_removed);
        assert_eq!(without.n_outliers, 1);
        assert_eq!(without.n_train + 1, with.n_train);
    }

    #[test]
    fn tiny_series_copy_raw_fit() {
        let frames = periodic(0x100, 0.1, 3, None);
        let set: ProfileSet<f64> = train(&[frames], &small()).unwrap();
        let w = set.get(Aid(0x100), Variant::WithoutOutliers).unwrap();
        assert!(!w.outliers_removed);
        assert_eq!(Some(w), set.get(Aid(0x100), Variant::WithOutliers));
    }

    #[test]
    fn constant_gaps_have_no_distribution_models() {
        let frames: Vec<CanFrame> = (0..10).map(|k| CanFrame::new(k as f64 * 0.5, 0x10, &[]).unwrap()).collect();
        let set: ProfileSet<f64> = train(&[frames], &small()).unwrap();
        let p = set.get(Aid(0x10), Variant::WithOutliers).unwrap();
        assert_eq!(p.sigma, 0.0);
        assert!(p.gaussian.is_none() && p.kde.is_none());
    }

    #[test]
    fn empty_training_is_an_error() {
        assert!(matches!(train::<f64>(&[vec![]], &small()), Err(ProfileError::NoTrainingData)));
    }

    #[test]
    fn json_round_trip_and_version_check() {
        let set: ProfileSet<f64> = train(&[periodic(0x7, 0.02, 300, None)], &small()).unwrap();
        let back = ProfileSet::<f64>::from_json(&set.to_json()).unwrap();
        assert_eq!(back, set);
        let bumped = set.to_json().replacen("\"format_version\": 1", "\"format_version\": 9", 1);
        assert!(matches!(ProfileSet::<f64>::from_json(&bumped), Err(ProfileError::Version(9))));
    }

    #[test]
    fn single_variant_modes() {
        let cfg = TrainingConfig { outliers: OutlierMode::With, ..small() };
        let set: ProfileSet<f32> = train(&[periodic(0x7, 0.02, 100, None)], &cfg).unwrap();
        assert_eq!(set.select(Variant::WithOutliers).len(), 1);
        assert!(set.select(Variant::WithoutOutliers).is_empty());
        assert!(!set.has_variant(Variant::WithoutOutliers));
        assert_eq!(set.summary().len(), 1);
        assert!(set.summary_table().contains("007"));
    }

    #[test]
    fn parse_modes() {
        assert_eq!("BOTH".parse::<OutlierMode>().unwrap(), OutlierMode::Both);
        assert!("some".parse::<OutlierMode>().is_err());
        assert_eq!("without".parse::<Variant>().unwrap(), Variant::WithoutOutliers);
    }
}
