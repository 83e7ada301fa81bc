//! Evaluation report, verdict CSV persistence and plot-ready artifacts.
//!
//! The in-memory path and the CSV path both produce an [`EvalInput`] and go
//! through [`build_report`], so a report regenerated from persisted verdicts
//! is identical to the original.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::{self, BufRead, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{
    attack_intervals, latency_report, pr_curve, ConfusionCounts, LatencyEntry, LatencyStats, PrCurve, PrPoint,
};
use crate::detect::{Method, SweepRun, Verdict};
use crate::error::EvalError;
use crate::frame::{Aid, CanFrame};

pub const REPORT_FORMAT_VERSION: u32 = 1;
pub const VERDICT_CSV_HEADER: &str = "frame_index,timestamp,aid_hex,label,verdict,method,alpha";

/// Compact per-frame verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VerdictCode {
    Benign,
    Malicious,
    Unscored,
}

impl From<Verdict> for VerdictCode {
    fn from(v: Verdict) -> Self {
        match v {
            Verdict::Benign => VerdictCode::Benign,
            Verdict::Malicious => VerdictCode::Malicious,
            Verdict::Unscored(_) => VerdictCode::Unscored,
        }
    }
}

impl VerdictCode {
    pub fn as_str(self) -> &'static str {
        match self {
            VerdictCode::Benign => "0",
            VerdictCode::Malicious => "1",
            VerdictCode::Unscored => "unscored",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "0" => Some(VerdictCode::Benign),
            "1" => Some(VerdictCode::Malicious),
            "unscored" => Some(VerdictCode::Unscored),
            _ => None,
        }
    }
}

/// Timestamps are carried at the verdict-file resolution (1 µs) so that
/// reports built before and after a CSV round trip agree.
fn canonical_time(t: f64) -> f64 {
    format!("{t:.6}").parse().expect("formatted float parses")
}

/// Ground truth of one capture.
#[derive(Debug, Clone, PartialEq)]
pub struct LogTruth {
    pub timestamps: Vec<f64>,
    pub aids: Vec<Aid>,
    pub labels: Vec<bool>,
}

impl LogTruth {
    pub fn new(frames: &[CanFrame], labels: &[bool]) -> Result<Self, EvalError> {
        if frames.len() != labels.len() {
            return Err(EvalError::LengthMismatch { verdicts: frames.len(), labels: labels.len() });
        }
        Ok(LogTruth {
            timestamps: frames.iter().map(|f| canonical_time(f.timestamp)).collect(),
            aids: frames.iter().map(|f| f.aid).collect(),
            labels: labels.to_vec(),
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// Verdicts of one (method, alpha) over every capture.
#[derive(Debug, Clone, PartialEq)]
pub struct RunVerdicts {
    pub method: Method,
    pub alpha: f64,
    pub verdicts: Vec<Vec<VerdictCode>>,
}

impl RunVerdicts {
    pub fn from_sweep(method: Method, run: &SweepRun) -> Self {
        RunVerdicts {
            method,
            alpha: run.alpha,
            verdicts: run.verdicts.iter().map(|v| v.iter().map(|&x| x.into()).collect()).collect(),
        }
    }
}

/// Everything needed to evaluate one profile variant.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalInput {
    /// Free-form tag carried into the report, e.g. the outlier variant.
    pub variant: Option<String>,
    pub logs: Vec<LogTruth>,
    pub runs: Vec<RunVerdicts>,
}

impl EvalInput {
    pub fn check(&self) -> Result<(), EvalError> {
        for run in &self.runs {
            if run.verdicts.len() != self.logs.len() {
                return Err(EvalError::LengthMismatch { verdicts: run.verdicts.len(), labels: self.logs.len() });
            }
            for (v, truth) in run.verdicts.iter().zip(&self.logs) {
                if v.len() != truth.len() {
                    return Err(EvalError::LengthMismatch { verdicts: v.len(), labels: truth.len() });
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveReport {
    pub method: Method,
    pub variant: Option<String>,
    pub curve: PrCurve,
    /// Messages the method could not score (unknown AID, degenerate profile);
    /// they count as negative verdicts.
    pub unscored: u64,
    /// First-alert latency per attack at the optimal threshold.
    pub latency: Vec<LatencyEntry>,
    pub latency_stats: LatencyStats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub format_version: u32,
    pub messages: u64,
    pub positives: u64,
    pub baseline: f64,
    /// Value used for 0/0 precision, recall and F1.
    pub zero_division: f64,
    /// Metrics pool all captures ("micro").
    pub pooling: String,
    pub curves: Vec<CurveReport>,
}

fn evaluate_input(input: &EvalInput) -> Vec<CurveReport> {
    let mut by_method: BTreeMap<Method, Vec<&RunVerdicts>> = BTreeMap::new();
    for run in &input.runs {
        by_method.entry(run.method).or_default().push(run);
    }
    let intervals = attack_intervals(&input.logs);
    by_method
        .into_iter()
        .map(|(method, runs)| {
            let points: Vec<PrPoint> = runs
                .iter()
                .map(|run| {
                    let mut c = ConfusionCounts::default();
                    for (v, truth) in run.verdicts.iter().zip(&input.logs) {
                        for (&code, &label) in v.iter().zip(&truth.labels) {
                            c.add(code == VerdictCode::Malicious, label);
                        }
                    }
                    PrPoint::new(run.alpha, c)
                })
                .collect();
            let unscored = runs[0].verdicts.iter().flatten().filter(|&&c| c == VerdictCode::Unscored).count() as u64;
            let curve = pr_curve(method, points);
            let best = runs.iter().find(|r| r.alpha.total_cmp(&curve.optimal_alpha).is_eq()).copied();
            let mut true_alerts = Vec::new();
            if let Some(run) = best {
                for (log, (v, truth)) in run.verdicts.iter().zip(&input.logs).enumerate() {
                    for (i, &code) in v.iter().enumerate() {
                        if code == VerdictCode::Malicious && truth.labels[i] {
                            true_alerts.push((log, truth.timestamps[i]));
                        }
                    }
                }
            }
            let latency = latency_report(&intervals, &true_alerts);
            let latency_stats = LatencyStats::from_entries(&latency);
            CurveReport { method, variant: input.variant.clone(), curve, unscored, latency, latency_stats }
        })
        .collect()
}

/// Evaluates one or more variants over the same captures. Totals come from
/// the first input.
pub fn build_report(inputs: &[EvalInput]) -> Result<EvalReport, EvalError> {
    for input in inputs {
        input.check()?;
    }
    let (messages, positives) = inputs.first().map_or((0, 0), |i| {
        let m: usize = i.logs.iter().map(LogTruth::len).sum();
        let p: usize = i.logs.iter().map(|l| l.labels.iter().filter(|&&x| x).count()).sum();
        (m as u64, p as u64)
    });
    Ok(EvalReport {
        format_version: REPORT_FORMAT_VERSION,
        messages,
        positives,
        baseline: if messages == 0 { 0.0 } else { positives as f64 / messages as f64 },
        zero_division: 0.0,
        pooling: "micro".to_owned(),
        curves: inputs.iter().flat_map(evaluate_input).collect(),
    })
}

/// Appends one verdict CSV line (with newline) to `out`.
#[allow(clippy::too_many_arguments)]
pub fn verdict_row(
    out: &mut String,
    frame_index: usize,
    timestamp: f64,
    aid: Aid,
    label: Option<bool>,
    verdict: VerdictCode,
    method: Method,
    alpha: f64,
) {
    let label = match label {
        Some(true) => "1",
        Some(false) => "0",
        None => "",
    };
    writeln!(out, "{frame_index},{timestamp:.6},{aid},{label},{},{method},{alpha}", verdict.as_str())
        .expect("writing to a String cannot fail");
}

pub fn write_verdict_header<W: Write>(out: &mut W) -> io::Result<()> {
    writeln!(out, "{VERDICT_CSV_HEADER}")
}

/// Writes all runs of `input`: runs in order, captures in order within a
/// run, `frame_index` restarting at 0 for each capture.
pub fn write_verdict_csv<W: Write>(input: &EvalInput, mut out: W) -> io::Result<()> {
    write_verdict_header(&mut out)?;
    let mut buf = String::new();
    for run in &input.runs {
        for (v, truth) in run.verdicts.iter().zip(&input.logs) {
            for (i, &code) in v.iter().enumerate() {
                verdict_row(
                    &mut buf,
                    i,
                    truth.timestamps[i],
                    truth.aids[i],
                    Some(truth.labels[i]),
                    code,
                    run.method,
                    run.alpha,
                );
                if buf.len() > 1 << 16 {
                    out.write_all(buf.as_bytes())?;
                    buf.clear();
                }
            }
        }
    }
    out.write_all(buf.as_bytes())?;
    out.flush()
}

/// Reads a verdict CSV written by [`write_verdict_csv`] (or by the batch
/// detector). Consecutive rows with the same method and alpha form one run;
/// a `frame_index` of 0 starts a new capture. Labels are required.
pub fn read_verdict_csv<R: BufRead>(input: R, variant: Option<String>) -> Result<EvalInput, EvalError> {
    let mut logs: Vec<LogTruth> = Vec::new();
    let mut runs: Vec<RunVerdicts> = Vec::new();
    let mut key: Option<(Method, u64)> = None;
    let mut log_in_run = 0usize;
    for (idx, line) in input.lines().enumerate() {
        let line_no = idx + 1;
        let bad = |reason: String| EvalError::BadVerdictRow { line: line_no, reason };
        let line = line.map_err(|e| bad(e.to_string()))?;
        if idx == 0 {
            if line.trim() != VERDICT_CSV_HEADER {
                return Err(bad(format!("expected header `{VERDICT_CSV_HEADER}`")));
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 7 {
            return Err(bad(format!("expected 7 fields, found {}", f.len())));
        }
        let index: usize = f[0].parse().map_err(|_| bad("bad frame_index".into()))?;
        let timestamp: f64 = f[1].parse().map_err(|_| bad("bad timestamp".into()))?;
        let aid: Aid = f[2].parse().map_err(|_| bad("bad aid_hex".into()))?;
        let label = match f[3] {
            "1" => true,
            "0" => false,
            "" => return Err(bad("label missing; evaluation needs labeled verdicts".into())),
            other => return Err(bad(format!("bad label `{other}`"))),
        };
        let code = VerdictCode::parse(f[4]).ok_or_else(|| bad(format!("bad verdict `{}`", f[4])))?;
        let method: Method = f[5].parse().map_err(|_| bad(format!("unknown method `{}`", f[5])))?;
        let alpha: f64 = f[6].parse().map_err(|_| bad("bad alpha".into()))?;

        let this = (method, alpha.to_bits());
        if key != Some(this) {
            if index != 0 {
                return Err(bad("a new run must start at frame_index 0".into()));
            }
            key = Some(this);
            runs.push(RunVerdicts { method, alpha, verdicts: Vec::new() });
            log_in_run = 0;
        }
        let run = runs.last_mut().expect("pushed above");
        if index == 0 {
            run.verdicts.push(Vec::new());
            log_in_run = run.verdicts.len() - 1;
        }
        let is_first_run = runs.len() == 1;
        let run = runs.last_mut().expect("pushed above");
        let v = &mut run.verdicts[log_in_run];
        if index != v.len() {
            return Err(bad(format!("frame_index {index} out of sequence")));
        }
        v.push(code);
        if is_first_run {
            if log_in_run == logs.len() {
                logs.push(LogTruth { timestamps: Vec::new(), aids: Vec::new(), labels: Vec::new() });
            }
            let t = &mut logs[log_in_run];
            t.timestamps.push(timestamp);
            t.aids.push(aid);
            t.labels.push(label);
        } else {
            let t = logs.get(log_in_run).ok_or_else(|| bad("more captures than in the first run".into()))?;
            if t.labels.get(index) != Some(&label) || t.aids.get(index) != Some(&aid) {
                return Err(bad("row disagrees with the first run's ground truth".into()));
            }
        }
    }
    let input = EvalInput { variant, logs, runs };
    input.check()?;
    Ok(input)
}

fn variant_tag(v: &Option<String>) -> &str {
    v.as_deref().unwrap_or("all")
}

impl EvalReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    /// Flat CSV of every PR point.
    pub fn pr_points_csv(&self) -> String {
        let mut out = String::from("method,variant,alpha,precision,recall,f1,tp,fp,fn,tn\n");
        for c in &self.curves {
            for p in &c.curve.points {
                writeln!(
                    out,
                    "{},{},{},{},{},{},{},{},{},{}",
                    c.method,
                    variant_tag(&c.variant),
                    p.alpha,
                    p.precision,
                    p.recall,
                    p.f1,
                    p.counts.tp,
                    p.counts.fp,
                    p.counts.fn_,
                    p.counts.tn
                )
                .expect("string write");
            }
        }
        out
    }

    /// One line per curve: area, baseline and optimal threshold.
    pub fn summary_csv(&self) -> String {
        let mut out = String::from(
            "method,variant,auc_pr,baseline,optimal_alpha,optimal_f1,unscored,attacks,detected,mean_latency_s\n",
        );
        for c in &self.curves {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{}",
                c.method,
                variant_tag(&c.variant),
                c.curve.auc_pr,
                c.curve.baseline,
                c.curve.optimal_alpha,
                c.curve.optimal_f1,
                c.unscored,
                c.latency_stats.attacks,
                c.latency_stats.detected,
                c.latency_stats.mean.map_or(String::new(), |m| m.to_string())
            )
            .expect("string write");
        }
        out
    }

    /// Gnuplot data block of one curve: `recall precision alpha f1`.
    pub fn dat(curve: &CurveReport) -> String {
        let mut out = format!(
            "# {} ({}) AUC-PR {:.4} baseline {:.4}\n# recall precision alpha f1\n",
            curve.method,
            variant_tag(&curve.variant),
            curve.curve.auc_pr,
            curve.curve.baseline
        );
        for p in &curve.curve.points {
            writeln!(out, "{} {} {} {}", p.recall, p.precision, p.alpha, p.f1).expect("string write");
        }
        out
    }

    /// Human-readable table: AUC-PR and best F1 per method and variant.
    pub fn summary_table(&self) -> String {
        let mut out = format!(
            "messages {}  positives {}  baseline {:.2}%\n{:<9} {:<8} {:>8} {:>8} {:>8} {:>9} {:>9}\n",
            self.messages,
            self.positives,
            100.0 * self.baseline,
            "method",
            "variant",
            "AUC-PR%",
            "alpha*",
            "F1*",
            "unscored",
            "detected"
        );
        for c in &self.curves {
            writeln!(
                out,
                "{:<9} {:<8} {:>8.2} {:>8.4} {:>8.4} {:>9} {:>5}/{:<3}",
                c.method.name(),
                variant_tag(&c.variant),
                100.0 * c.curve.auc_pr,
                c.curve.optimal_alpha,
                c.curve.optimal_f1,
                c.unscored,
                c.latency_stats.detected,
                c.latency_stats.attacks
            )
            .expect("string write");
        }
        out
    }

    /// Writes `report.json`, `pr_points.csv`, `summary.csv` and one
    /// `pr_<method>_<variant>.dat` per curve into `dir`.
    pub fn write_artifacts(&self, dir: &Path) -> io::Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        let mut put = |name: String, body: String| -> io::Result<()> {
            let path = dir.join(name);
            fs::write(&path, body)?;
            written.push(path);
            Ok(())
        };
        put("report.json".into(), self.to_json())?;
        put("pr_points.csv".into(), self.pr_points_csv())?;
        put("summary.csv".into(), self.summary_csv())?;
        for c in &self.curves {
            put(format!("pr_{}_{}.dat", c.method, variant_tag(&c.variant)), Self::dat(c))?;
        }
        Ok(written)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn input() -> EvalInput {
        let frames: Vec<CanFrame> = (0..6).map(|i| CanFrame::new(0.5 + i as f64 * 0.1, 0x10, &[]).unwrap()).collect();
        let labels = [false, false, true, true, false, false];
        let truth = LogTruth::new(&frames, &labels).unwrap();
        let b = VerdictCode::Benign;
        let m = VerdictCode::Malicious;
        let u = VerdictCode::Unscored;
        EvalInput {
            variant: Some("without".into()),
            logs: vec![truth.clone(), truth],
            runs: vec![
                RunVerdicts {
                    method: Method::Binning,
                    alpha: 3.5,
                    verdicts: vec![vec![b, b, m, m, b, b], vec![b, b, b, m, m, u]],
                },
                RunVerdicts {
                    method: Method::Binning,
                    alpha: 4.0,
                    verdicts: vec![vec![b, m, m, m, b, b], vec![b, b, m, m, m, u]],
                },
                RunVerdicts { method: Method::Mean, alpha: 1.0 / 3.0, verdicts: vec![vec![b; 6], vec![u; 6]] },
            ],
        }
    }

    #[test]
    fn report_counts_and_latency() {
        let r = build_report(&[input()]).unwrap();
        assert_eq!((r.messages, r.positives), (12, 4));
        let bin = &r.curves[1];
        assert_eq!(bin.method, Method::Binning);
        assert_eq!(bin.curve.points.len(), 2);
        assert_eq!(bin.unscored, 1);
        // alpha 3.5: tp 3, fp 1, fn 1 (F1 0.75); alpha 4: tp 4, fp 2 (F1 0.8)
        assert_eq!(bin.curve.optimal_alpha, 4.0);
        assert!((bin.curve.optimal_f1 - 0.8).abs() < 1e-12);
        assert_eq!(bin.latency.len(), 2);
        assert_eq!(bin.latency[0].latency, Some(0.0));
        assert_eq!(bin.latency[1].latency, Some(0.0));
        let mean = &r.curves[0];
        assert_eq!(mean.curve.auc_pr, 0.0);
        assert_eq!(mean.latency_stats.missed, 2);
    }

    #[test]
    fn csv_regeneration_is_identical() {
        let inp = input();
        let mut buf = Vec::new();
        write_verdict_csv(&inp, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with(VERDICT_CSV_HEADER));
        assert!(text.contains("\n2,0.700000,010,1,1,binning,3.5\n"));
        let back = read_verdict_csv(text.as_bytes(), Some("without".into())).unwrap();
        assert_eq!(back, inp);
        assert_eq!(build_report(&[back]).unwrap().to_json(), build_report(&[inp]).unwrap().to_json());
    }

    #[test]
    fn csv_errors() {
        assert!(read_verdict_csv("nope\n".as_bytes(), None).is_err());
        let unlabeled = format!("{VERDICT_CSV_HEADER}\n0,0.000000,010,,1,binning,3.5\n");
        assert!(matches!(read_verdict_csv(unlabeled.as_bytes(), None), Err(EvalError::BadVerdictRow { line: 2, .. })));
        let skip = format!("{VERDICT_CSV_HEADER}\n0,0.000000,010,0,1,binning,3.5\n2,0.100000,010,0,1,binning,3.5\n");
        assert!(read_verdict_csv(skip.as_bytes(), None).is_err());
    }

    #[test]
    fn artifacts() {
        let r = build_report(&[input()]).unwrap();
        assert_eq!(EvalReport::from_json(&r.to_json()).unwrap(), r);
        assert_eq!(r.pr_points_csv().lines().count(), 4);
        assert!(r.summary_table().contains("binning"));
        let dir = std::env::temp_dir().join(format!("canids-report-{}", std::process::id()));
        let files = r.write_artifacts(&dir).unwrap();
        assert_eq!(files.len(), 5);
        fs::remove_dir_all(dir).unwrap();
    }
}
