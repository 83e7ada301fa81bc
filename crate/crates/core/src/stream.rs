//! Live detection over a candump text stream.

use std::io::{self, BufRead, Write};
use std::sync::atomic::{AtomicU64, Ordering};

use crate::candump::parse_line;
use crate::detect::DetectorBank;
use crate::eval::{verdict_row, write_verdict_header, VerdictCode};
use crate::scalar::Scalar;

/// Progress counters, readable from another thread (e.g. a signal handler).
#[derive(Debug, Default)]
pub struct StreamCounters {
    pub frames: AtomicU64,
    pub alerts: AtomicU64,
    pub malformed: AtomicU64,
}

impl StreamCounters {
    pub fn snapshot(&self) -> (u64, u64, u64) {
        (
            self.frames.load(Ordering::Relaxed),
            self.alerts.load(Ordering::Relaxed),
            self.malformed.load(Ordering::Relaxed),
        )
    }

    pub fn summary(&self) -> String {
        let (frames, alerts, malformed) = self.snapshot();
        format!("frames={frames} alerts={alerts} malformed={malformed}")
    }
}

/// Reads candump lines until end of input, one frame at a time, and writes a
/// verdict-CSV row (empty label) for every alert. The output is flushed after
/// each alert so it reaches the consumer before the next frame is read.
/// Malformed lines are logged and skipped.
pub fn run_stream<T: Scalar, R: BufRead, W: Write>(
    input: R,
    out: &mut W,
    bank: &mut DetectorBank<'_, T>,
    counters: &StreamCounters,
) -> io::Result<()> {
    write_verdict_header(out)?;
    out.flush()?;
    let method = bank.config().method;
    let alpha = bank.config().alpha;
    let mut row = String::with_capacity(96);
    for (idx, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let frame = match parse_line(&line, idx + 1) {
            Ok(f) => f,
            Err(e) => {
                counters.malformed.fetch_add(1, Ordering::Relaxed);
                log::warn!("{e}");
                continue;
            }
        };
        counters.frames.fetch_add(1, Ordering::Relaxed);
        if let Some(alert) = bank.step(&frame).alert {
            row.clear();
            verdict_row(
                &mut row,
                alert.frame_index,
                alert.timestamp,
                alert.aid,
                None,
                VerdictCode::Malicious,
                method,
                alpha,
            );
            out.write_all(row.as_bytes())?;
            out.flush()?;
            counters.alerts.fetch_add(1, Ordering::Relaxed);
        }
    }
    out.flush()
}
