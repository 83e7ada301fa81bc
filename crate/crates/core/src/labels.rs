//! Ground-truth labels: attack metadata, label derivation and the labeled-frame CSV.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::CanError;
use crate::frame::{Aid, CanFrame, FrameSource, LabeledFrame, MAX_PAYLOAD, STANDARD_AID_LIMIT};

/// Injected-payload pattern: hex nibbles, `X` matches any nibble.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PayloadPattern {
    nibbles: Vec<Option<u8>>,
}

impl PayloadPattern {
    pub fn parse(s: &str) -> Result<Self, CanError> {
        if !s.len().is_multiple_of(2) || s.len() > 2 * MAX_PAYLOAD {
            return Err(CanError::InvalidMetadata(format!("payload pattern `{s}` is not whole bytes")));
        }
        let nibbles = s
            .chars()
            .map(|c| match c {
                'x' | 'X' => Ok(None),
                c => c
                    .to_digit(16)
                    .map(|d| Some(d as u8))
                    .ok_or_else(|| CanError::InvalidMetadata(format!("bad nibble `{c}` in `{s}`"))),
            })
            .collect::<Result<_, _>>()?;
        Ok(PayloadPattern { nibbles })
    }

    pub fn matches(&self, payload: &[u8]) -> bool {
        self.nibbles.len() == payload.len() * 2
            && payload.iter().enumerate().all(|(i, b)| {
                let hi = self.nibbles[2 * i].is_none_or(|n| n == b >> 4);
                let lo = self.nibbles[2 * i + 1].is_none_or(|n| n == b & 0xF);
                hi && lo
            })
    }

    pub fn to_hex(&self) -> String {
        self.nibbles
            .iter()
            .map(|n| n.map_or('X', |d| char::from_digit(d as u32, 16).unwrap().to_ascii_uppercase()))
            .collect()
    }
}

/// What was injected, and when.
///
/// `injection_id == None` means any AID (fuzzing).
#[derive(Debug, Clone, PartialEq)]
pub struct AttackMetadata {
    pub injection_id: Option<Aid>,
    pub injection_data: PayloadPattern,
    pub interval_start: f64,
    pub interval_end: f64,
}

#[derive(Serialize, Deserialize)]
struct MetadataDoc {
    injection_id: String,
    injection_data_str: String,
    injection_interval_start: f64,
    injection_interval_end: f64,
}

impl AttackMetadata {
    /// Reads one attack description from a JSON object.
    ///
    /// Interval fields may be given flat (`injection_interval_start`/`_end`) or as
    /// a two-element `injection_interval` array.
    pub fn from_value(v: &Value) -> Result<Self, CanError> {
        let obj = v.as_object().ok_or_else(|| CanError::InvalidMetadata("metadata must be an object".into()))?;
        let id = obj.get("injection_id").and_then(Value::as_str).ok_or(CanError::MissingMetadata("injection_id"))?;
        let data = obj
            .get("injection_data_str")
            .and_then(Value::as_str)
            .ok_or(CanError::MissingMetadata("injection_data_str"))?;
        let (start, end) = match (
            obj.get("injection_interval_start").and_then(Value::as_f64),
            obj.get("injection_interval_end").and_then(Value::as_f64),
        ) {
            (Some(s), Some(e)) => (s, e),
            _ => match obj.get("injection_interval").and_then(Value::as_array) {
                Some(pair) if pair.len() == 2 => (
                    pair[0].as_f64().ok_or(CanError::MissingMetadata("injection_interval_start"))?,
                    pair[1].as_f64().ok_or(CanError::MissingMetadata("injection_interval_end"))?,
                ),
                _ if obj.contains_key("injection_interval_start") => {
                    return Err(CanError::MissingMetadata("injection_interval_end"))
                }
                _ => return Err(CanError::MissingMetadata("injection_interval_start")),
            },
        };
        if !(start.is_finite() && end.is_finite() && start <= end) {
            return Err(CanError::InvalidMetadata(format!("interval [{start}, {end}] is empty")));
        }
        let injection_id = if id.chars().all(|c| c == 'x' || c == 'X') || id.eq_ignore_ascii_case("0xXXX") {
            None
        } else {
            Some(id.parse().map_err(|_| CanError::InvalidMetadata(format!("bad injection_id `{id}`")))?)
        };
        Ok(AttackMetadata {
            injection_id,
            injection_data: PayloadPattern::parse(data)?,
            interval_start: start,
            interval_end: end,
        })
    }

    pub fn from_json(text: &str) -> Result<Self, CanError> {
        let v: Value = serde_json::from_str(text).map_err(|e| CanError::InvalidMetadata(e.to_string()))?;
        Self::from_value(&v)
    }

    pub fn to_json(&self) -> String {
        let doc = MetadataDoc {
            injection_id: self.injection_id.map_or_else(|| "XXX".to_owned(), |a| format!("0x{a}")),
            injection_data_str: self.injection_data.to_hex(),
            injection_interval_start: self.interval_start,
            injection_interval_end: self.interval_end,
        };
        serde_json::to_string_pretty(&doc).expect("metadata serializes")
    }

    /// Shifts the interval by `offset` seconds (relative metadata → absolute capture time).
    pub fn shifted(&self, offset: f64) -> Self {
        AttackMetadata {
            interval_start: self.interval_start + offset,
            interval_end: self.interval_end + offset,
            ..self.clone()
        }
    }

    pub fn matches(&self, frame: &CanFrame) -> bool {
        frame.timestamp >= self.interval_start
            && frame.timestamp <= self.interval_end
            && self.injection_id.is_none_or(|aid| aid == frame.aid)
            && self.injection_data.matches(&frame.payload)
    }
}

/// Labels each frame attack iff it falls inside the interval and matches the
/// injected AID (when fixed) and payload pattern.
pub fn derive_labels(frames: &[CanFrame], meta: &[AttackMetadata]) -> Vec<LabeledFrame> {
    frames
        .iter()
        .map(|f| LabeledFrame {
            frame: f.clone(),
            label: meta.iter().any(|m| m.matches(f)),
            source: FrameSource::DerivedFromMetadata,
        })
        .collect()
}

const CSV_HEADER: [&str; 4] = ["timestamp", "aid_hex", "payload_hex", "label"];

pub fn write_labeled_csv<W: Write>(frames: &[LabeledFrame], out: W) -> Result<(), CanError> {
    let mut w = csv::Writer::from_writer(out);
    let csv_err = |e: csv::Error| CanError::Csv(e.to_string());
    w.write_record(CSV_HEADER).map_err(csv_err)?;
    for lf in frames {
        let f = &lf.frame;
        let aid = if f.extended { format!("{:08X}", f.aid.0) } else { f.aid.to_string() };
        let payload: String = f.payload.iter().map(|b| format!("{b:02X}")).collect();
        w.write_record([format!("{:.6}", f.timestamp), aid, payload, if lf.label { "1" } else { "0" }.to_owned()])
            .map_err(csv_err)?;
    }
    w.flush().map_err(|e| CanError::Csv(e.to_string()))
}

/// Reads the labeled-frame CSV; frames get channel `can0`.
pub fn read_labeled_csv<R: Read>(input: R) -> Result<Vec<LabeledFrame>, CanError> {
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let mut out = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let line = i + 2;
        let bad = |reason: String| CanError::MalformedLine { line, reason };
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        if rec.len() != 4 {
            return Err(bad(format!("expected 4 fields, got {}", rec.len())));
        }
        let timestamp: f64 = rec[0].trim().parse().map_err(|_| bad("bad timestamp".into()))?;
        let id = rec[1].trim();
        let aid: Aid = id.parse().map_err(|_| bad(format!("bad aid `{id}`")))?;
        let hex = rec[2].trim();
        if hex.len() % 2 != 0 {
            return Err(bad("payload has an odd number of nibbles".into()));
        }
        let payload = (0..hex.len())
            .step_by(2)
            .map(|j| u8::from_str_radix(&hex[j..j + 2], 16))
            .collect::<Result<Vec<u8>, _>>()
            .map_err(|_| bad("payload is not hex".into()))?;
        let label = match rec[3].trim() {
            "1" | "true" => true,
            "0" | "false" => false,
            other => return Err(bad(format!("bad label `{other}`"))),
        };
        let frame = CanFrame {
            timestamp,
            aid,
            extended: id.len() > 3 || aid.0 >= STANDARD_AID_LIMIT,
            payload,
            channel: "can0".into(),
        };
        frame.validate().map_err(|e| bad(e.to_string()))?;
        out.push(LabeledFrame {
            frame,
            label,
            source: if label { FrameSource::Injected } else { FrameSource::Ambient },
        });
    }
    Ok(out)
}
