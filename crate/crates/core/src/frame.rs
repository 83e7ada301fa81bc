//! CAN frame data model.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::CanError;

/// Largest identifier representable in an extended (29-bit) frame, plus one.
pub const AID_LIMIT: u32 = 1 << 29;
/// Largest standard (11-bit) identifier, plus one.
pub const STANDARD_AID_LIMIT: u32 = 1 << 11;
pub const MAX_PAYLOAD: usize = 8;

/// Arbitration identifier.
///
/// Displayed and serialized as upper-case hex, three digits minimum (`0D0`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Aid(pub u32);

impl Aid {
    pub fn is_standard(self) -> bool {
        self.0 < STANDARD_AID_LIMIT
    }
}

impl fmt::Display for Aid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:03X}", self.0)
    }
}

impl FromStr for Aid {
    type Err = CanError;

    /// Accepts `0D0`, `0x0d0` and `0X0D0`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let digits = s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")).unwrap_or(s);
        let bad = || CanError::InvalidFrame(format!("bad arbitration id `{s}`"));
        if digits.is_empty() || digits.len() > 8 {
            return Err(bad());
        }
        let v = u32::from_str_radix(digits, 16).map_err(|_| bad())?;
        if v >= AID_LIMIT {
            return Err(bad());
        }
        Ok(Aid(v))
    }
}

impl Serialize for Aid {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Aid {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// One CAN data frame as captured.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CanFrame {
    /// Seconds since the capture epoch.
    pub timestamp: f64,
    pub aid: Aid,
    /// Set when the identifier was written in 29-bit form.
    pub extended: bool,
    pub payload: Vec<u8>,
    pub channel: String,
}

impl CanFrame {
    pub fn new(timestamp: f64, aid: u32, payload: &[u8]) -> Result<Self, CanError> {
        let frame = CanFrame {
            timestamp,
            aid: Aid(aid),
            extended: aid >= STANDARD_AID_LIMIT,
            payload: payload.to_vec(),
            channel: "can0".to_owned(),
        };
        frame.validate()?;
        Ok(frame)
    }

    pub fn with_channel(mut self, channel: impl Into<String>) -> Self {
        self.channel = channel.into();
        self
    }

    pub fn validate(&self) -> Result<(), CanError> {
        if !(self.timestamp.is_finite() && self.timestamp >= 0.0) {
            return Err(CanError::InvalidFrame(format!(
                "timestamp {} must be finite and non-negative",
                self.timestamp
            )));
        }
        if self.aid.0 >= AID_LIMIT {
            return Err(CanError::InvalidFrame(format!("aid {:X} exceeds 29 bits", self.aid.0)));
        }
        if !self.extended && !self.aid.is_standard() {
            return Err(CanError::InvalidFrame(format!("aid {:X} needs the extended flag", self.aid.0)));
        }
        if self.payload.len() > MAX_PAYLOAD {
            return Err(CanError::InvalidFrame(format!(
                "payload of {} bytes exceeds {MAX_PAYLOAD}",
                self.payload.len()
            )));
        }
        if self.channel.is_empty() || self.channel.contains(char::is_whitespace) {
            return Err(CanError::InvalidFrame(format!("bad channel name `{}`", self.channel)));
        }
        Ok(())
    }
}

/// Where a frame's label came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FrameSource {
    Ambient,
    Injected,
    DerivedFromMetadata,
}

/// A frame with its ground-truth label (`true` = attack).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledFrame {
    pub frame: CanFrame,
    pub label: bool,
    pub source: FrameSource,
}

impl LabeledFrame {
    pub fn ambient(frame: CanFrame) -> Self {
        LabeledFrame { frame, label: false, source: FrameSource::Ambient }
    }

    pub fn injected(frame: CanFrame) -> Self {
        LabeledFrame { frame, label: true, source: FrameSource::Injected }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn aid_parses_both_spellings() {
        assert_eq!("0D0".parse::<Aid>().unwrap(), Aid(0xD0));
        assert_eq!("0x6e0".parse::<Aid>().unwrap(), Aid(0x6E0));
        assert_eq!(Aid(0xD0).to_string(), "0D0");
        assert!("".parse::<Aid>().is_err());
        assert!("20000000".parse::<Aid>().is_err());
        assert!("XYZ".parse::<Aid>().is_err());
    }

    #[test]
    fn frame_invariants() {
        assert!(CanFrame::new(0.0, 0x123, &[0; 8]).is_ok());
        assert!(CanFrame::new(0.0, 0x123, &[0; 9]).is_err());
        assert!(CanFrame::new(-1.0, 0x123, &[]).is_err());
        assert!(CanFrame::new(f64::NAN, 0x123, &[]).is_err());
        assert!(CanFrame::new(0.0, AID_LIMIT, &[]).is_err());
        let ext = CanFrame::new(0.0, 0x18DA_F110, &[]).unwrap();
        assert!(ext.extended);
    }
}
