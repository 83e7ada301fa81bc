//! candump text format: `(TIMESTAMP) CHANNEL AID#PAYLOADHEX`.
//!
//! Standard identifiers are written with three hex digits, extended ones with
//! eight. Timestamps are written with six decimals.

use std::fmt::Write as _;
use std::io::{self, BufRead, Write};

use crate::error::CanError;
use crate::frame::{Aid, CanFrame, AID_LIMIT, MAX_PAYLOAD, STANDARD_AID_LIMIT};

/// Result of parsing a capture: good frames plus per-line rejections.
#[derive(Debug, Default, Clone, PartialEq)]
pub struct ParsedLog {
    pub frames: Vec<CanFrame>,
    /// 1-based line number of each frame, parallel to `frames`.
    pub line_numbers: Vec<usize>,
    pub rejected: Vec<CanError>,
    /// Non-blank lines seen; always `frames.len() + rejected.len()`.
    pub lines: usize,
    /// Lines whose timestamp went backwards relative to the previous frame.
    pub non_monotone: Vec<usize>,
}

/// Parses one candump line. `line_no` is only used for error reporting.
pub fn parse_line(line: &str, line_no: usize) -> Result<CanFrame, CanError> {
    let bad = |reason: &str| CanError::MalformedLine { line: line_no, reason: reason.to_owned() };
    let mut fields = line.split_whitespace();
    let stamp = fields.next().ok_or_else(|| bad("empty line"))?;
    let channel = fields.next().ok_or_else(|| bad("missing channel"))?;
    let body = fields.next().ok_or_else(|| bad("missing AID#DATA"))?;
    if fields.next().is_some() {
        return Err(bad("trailing fields"));
    }

    let stamp = stamp
        .strip_prefix('(')
        .and_then(|s| s.strip_suffix(')'))
        .ok_or_else(|| bad("timestamp must be parenthesized"))?;
    let timestamp: f64 = stamp.parse().map_err(|_| bad("timestamp is not a number"))?;
    if !(timestamp.is_finite() && timestamp >= 0.0) {
        return Err(bad("timestamp must be finite and non-negative"));
    }

    let (id, data) = body.split_once('#').ok_or_else(|| bad("missing `#` separator"))?;
    if id.is_empty() || id.len() > 8 || !id.bytes().all(|b| b.is_ascii_hexdigit()) {
        return Err(bad("arbitration id is not 1-8 hex digits"));
    }
    let raw = u32::from_str_radix(id, 16).map_err(|_| bad("bad arbitration id"))?;
    if raw >= AID_LIMIT {
        return Err(bad("arbitration id exceeds 29 bits"));
    }
    let extended = id.len() > 3 || raw >= STANDARD_AID_LIMIT;

    if data.len() % 2 != 0 || data.len() > 2 * MAX_PAYLOAD {
        return Err(bad("payload must be 0-8 whole bytes of hex"));
    }
    let payload = (0..data.len())
        .step_by(2)
        .map(|i| {
            data.get(i..i + 2)
                .filter(|pair| pair.bytes().all(|b| b.is_ascii_hexdigit()))
                .and_then(|pair| u8::from_str_radix(pair, 16).ok())
        })
        .collect::<Option<Vec<u8>>>()
        .ok_or_else(|| bad("payload is not hex"))?;

    Ok(CanFrame { timestamp, aid: Aid(raw), extended, payload, channel: channel.to_owned() })
}

/// Parses a whole capture. Never fails: malformed lines are collected in
/// [`ParsedLog::rejected`] and blank lines are ignored.
pub fn parse_log<R: BufRead>(reader: R) -> io::Result<ParsedLog> {
    let mut out = ParsedLog::default();
    let mut last = f64::NEG_INFINITY;
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.lines += 1;
        match parse_line(&line, idx + 1) {
            Ok(frame) => {
                if frame.timestamp < last {
                    out.non_monotone.push(idx + 1);
                }
                last = frame.timestamp;
                out.frames.push(frame);
                out.line_numbers.push(idx + 1);
            }
            Err(e) => out.rejected.push(e),
        }
    }
    if !out.non_monotone.is_empty() {
        log::warn!(
            "{} frame(s) with timestamps earlier than their predecessor (first at line {})",
            out.non_monotone.len(),
            out.non_monotone[0]
        );
    }
    Ok(out)
}

pub fn parse_str(text: &str) -> ParsedLog {
    parse_log(text.as_bytes()).expect("reading from memory cannot fail")
}

/// Appends the candump line for `frame` (without newline) to `buf`.
pub fn format_frame(frame: &CanFrame, buf: &mut String) {
    let _ = write!(buf, "({:.6}) {} ", frame.timestamp, frame.channel);
    if frame.extended {
        let _ = write!(buf, "{:08X}#", frame.aid.0);
    } else {
        let _ = write!(buf, "{:03X}#", frame.aid.0);
    }
    for b in &frame.payload {
        let _ = write!(buf, "{b:02X}");
    }
}

pub fn write_log<W: Write>(frames: &[CanFrame], mut out: W) -> io::Result<()> {
    let mut line = String::with_capacity(48);
    for frame in frames {
        line.clear();
        format_frame(frame, &mut line);
        line.push('\n');
        out.write_all(line.as_bytes())?;
    }
    Ok(())
}

pub fn to_string(frames: &[CanFrame]) -> String {
    let mut buf = Vec::new();
    write_log(frames, &mut buf).expect("writing to memory cannot fail");
    String::from_utf8(buf).expect("candump output is ascii")
}
