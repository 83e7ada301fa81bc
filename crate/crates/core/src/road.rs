//! Adapter for the public ROAD CAN intrusion dataset layout.
//!
//! Expected layout under the root directory:
//! `ambient/*.log` (training uses the captures whose name contains `dyno`),
//! `attacks/*.log` and `attacks/capture_metadata.json`, the latter keyed by
//! capture name with `injection_id`, `injection_data_str` and
//! `injection_interval` fields.

use std::collections::BTreeMap;
use std::fs;
use std::io::{self, BufReader};
use std::path::{Path, PathBuf};

use serde_json::Value;

use crate::candump::parse_log;
use crate::error::CanError;
use crate::frame::{CanFrame, LabeledFrame};
use crate::labels::{derive_labels, AttackMetadata};

pub const ROAD_ENV: &str = "ROAD_DATASET_DIR";

/// Attack captures whose timing is unchanged by the attack.
const TIMING_NEUTRAL: [&str; 2] = ["masquerade", "accelerator"];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoadDataset {
    pub root: PathBuf,
}

fn logs_in(dir: &Path, keep: impl Fn(&str) -> bool) -> io::Result<Vec<PathBuf>> {
    let mut out: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(Result::ok)
        .map(|e| e.path())
        .filter(|p| p.extension().is_some_and(|x| x == "log"))
        .filter(|p| p.file_stem().and_then(|s| s.to_str()).is_some_and(&keep))
        .collect();
    out.sort();
    Ok(out)
}

/// A test capture with derived labels.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledCapture {
    pub name: String,
    pub frames: Vec<LabeledFrame>,
    pub metadata: AttackMetadata,
    pub rejected_lines: usize,
}

impl RoadDataset {
    /// The dataset named by `ROAD_DATASET_DIR`, if that directory exists.
    pub fn from_env() -> Option<Self> {
        let root = PathBuf::from(std::env::var_os(ROAD_ENV)?);
        root.join("attacks").is_dir().then_some(RoadDataset { root })
    }

    /// Ambient dynamometer captures.
    pub fn training_logs(&self) -> io::Result<Vec<PathBuf>> {
        logs_in(&self.root.join("ambient"), |s| s.contains("dyno"))
    }

    /// Fabrication-attack captures (masquerade and accelerator excluded).
    pub fn test_logs(&self) -> io::Result<Vec<PathBuf>> {
        logs_in(&self.root.join("attacks"), |s| !TIMING_NEUTRAL.iter().any(|x| s.contains(x)))
    }

    pub fn metadata(&self) -> Result<BTreeMap<String, AttackMetadata>, CanError> {
        let path = self.root.join("attacks").join("capture_metadata.json");
        let text =
            fs::read_to_string(&path).map_err(|e| CanError::InvalidMetadata(format!("{}: {e}", path.display())))?;
        let doc: Value = serde_json::from_str(&text).map_err(|e| CanError::InvalidMetadata(e.to_string()))?;
        let obj = doc.as_object().ok_or_else(|| CanError::InvalidMetadata("metadata root must be an object".into()))?;
        let mut out = BTreeMap::new();
        for (name, entry) in obj {
            match AttackMetadata::from_value(entry) {
                Ok(m) => {
                    out.insert(name.clone(), m);
                }
                Err(e) => log::debug!("{name}: no usable injection metadata ({e})"),
            }
        }
        Ok(out)
    }

    pub fn read_frames(path: &Path) -> io::Result<(Vec<CanFrame>, usize)> {
        let parsed = parse_log(BufReader::new(fs::File::open(path)?))?;
        for e in parsed.rejected.iter().take(5) {
            log::warn!("{}: {e}", path.display());
        }
        Ok((parsed.frames, parsed.rejected.len()))
    }

    /// Parses one attack capture and labels it from the metadata.
    pub fn load_test_log(
        &self,
        path: &Path,
        meta: &BTreeMap<String, AttackMetadata>,
    ) -> Result<LabeledCapture, CanError> {
        let name = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default().to_owned();
        let m = meta.get(&name).ok_or(CanError::MissingMetadata("injection_interval"))?;
        let (frames, rejected_lines) =
            Self::read_frames(path).map_err(|e| CanError::InvalidMetadata(format!("{}: {e}", path.display())))?;
        let m = align_interval(m, &frames);
        Ok(LabeledCapture {
            name,
            frames: derive_labels(&frames, std::slice::from_ref(&m)),
            metadata: m,
            rejected_lines,
        })
    }
}

/// Metadata intervals are given relative to the capture start; shift them to
/// absolute time when the capture uses epoch timestamps.
pub fn align_interval(meta: &AttackMetadata, frames: &[CanFrame]) -> AttackMetadata {
    let first = frames.iter().map(|f| f.timestamp).fold(f64::INFINITY, f64::min);
    if first.is_finite() && meta.interval_end < first {
        meta.shifted(first)
    } else {
        meta.clone()
    }
}
