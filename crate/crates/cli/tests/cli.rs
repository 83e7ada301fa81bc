use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::process::{Command, Output, Stdio};

use tempfile::TempDir;

fn canids(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_canids"))
        .args(args)
        .current_dir(dir)
        .env_remove("CANIDS_PROFILE_DIR")
        .env("RUST_LOG", "error")
        .output()
        .expect("binary runs")
}

fn ok(out: &Output) -> String {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

/// Simulated captures plus a trained profile in a fresh directory.
fn trained() -> TempDir {
    let dir = TempDir::new().unwrap();
    ok(&canids(dir.path(), &["simulate", "--seed", "3", "--out", "sim"]));
    ok(&canids(dir.path(), &["train", "sim/train.log", "--out", "prof/profile.json"]));
    dir
}

#[test]
fn simulate_writes_captures_and_metadata() {
    let dir = TempDir::new().unwrap();
    let stdout = ok(&canids(dir.path(), &["simulate", "--seed", "3", "--out", "sim"]));
    assert_eq!(stdout.lines().count(), 3);
    let meta = fs::read_to_string(dir.path().join("sim/test.json")).unwrap();
    assert!(meta.contains("\"injection_id\": \"0x0D0\""));
    let first = fs::read_to_string(dir.path().join("sim/train.log")).unwrap();
    ok(&canids(dir.path(), &["simulate", "--seed", "3", "--out", "again"]));
    assert_eq!(first, fs::read_to_string(dir.path().join("again/train.log")).unwrap());

    ok(&canids(dir.path(), &["simulate", "--seed", "3", "--format", "csv", "--out", "csv"]));
    let csv = fs::read_to_string(dir.path().join("csv/test.csv")).unwrap();
    assert!(csv.starts_with("timestamp,aid_hex,payload_hex,label"));
}

#[test]
fn train_prints_summary_and_rejects_empty_input() {
    let dir = trained();
    let profile = fs::read_to_string(dir.path().join("prof/profile.json")).unwrap();
    assert!(profile.contains("\"without_outliers\""));

    let out = ok(&canids(dir.path(), &["train", "sim/train.log", "--outliers", "without", "--out", "p2.json"]));
    let header = out.lines().next().unwrap();
    for col in ["aid", "variant", "n", "mu", "sigma", "min", "max"] {
        assert!(header.split_whitespace().any(|c| c == col), "{header}");
    }
    let row = out.lines().find(|l| l.trim_start().starts_with("0D0")).unwrap();
    let mu: f64 = row.split_whitespace().nth(3).unwrap().parse().unwrap();
    assert!((mu - 0.010).abs() < 0.010 * 0.01, "{row}");

    fs::write(dir.path().join("empty.log"), "").unwrap();
    let out = canids(dir.path(), &["train", "empty.log"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error: "));
}

#[test]
fn profile_directory_comes_from_environment() {
    let dir = trained();
    let out = Command::new(env!("CARGO_BIN_EXE_canids"))
        .args(["detect", "--method", "mean", "--alpha", "0.5", "sim/test.log"])
        .current_dir(dir.path())
        .env("CANIDS_PROFILE_DIR", dir.path().join("prof"))
        .output()
        .unwrap();
    let csv = ok(&out);
    assert!(csv.starts_with("frame_index,timestamp,aid_hex,label,verdict,method,alpha\n"));

    let missing = canids(dir.path(), &["detect", "--method", "mean", "--alpha", "0.5", "sim/test.log"]);
    assert!(!missing.status.success());
}

#[test]
fn batch_detect_with_labels() {
    let dir = trained();
    let out = ok(&canids(
        dir.path(),
        &[
            "detect",
            "--profile",
            "prof",
            "--method",
            "binning",
            "--alpha",
            "2.5",
            "--metadata",
            "sim/test.json",
            "sim/test.log",
        ],
    ));
    let rows: Vec<Vec<&str>> = out.lines().skip(1).map(|l| l.split(',').collect()).collect();
    let tp = rows.iter().filter(|r| r[3] == "1" && r[4] == "1").count();
    let fp = rows.iter().filter(|r| r[3] == "0" && r[4] == "1").count();
    assert!(tp > 900 && fp < 20, "tp {tp} fp {fp}");
    assert!(rows.iter().enumerate().all(|(i, r)| r[0] == i.to_string()));
}

#[test]
fn bad_flags_are_usage_errors() {
    let dir = trained();
    let unknown = canids(dir.path(), &["sweep", "--profile", "prof", "--method", "median", "sim/test.log"]);
    assert_eq!(unknown.status.code(), Some(2));
    let range =
        canids(dir.path(), &["detect", "--profile", "prof", "--method", "kde", "--alpha", "1.5", "sim/test.log"]);
    assert_eq!(range.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&range.stderr).contains("alpha"));
    let both = canids(
        dir.path(),
        &["detect", "--profile", "prof", "--method", "mean", "--alpha", "0.5", "--stream", "sim/test.log"],
    );
    assert_eq!(both.status.code(), Some(2));
}

#[test]
fn sweep_eval_report_agree() {
    let dir = trained();
    let table = ok(&canids(
        dir.path(),
        &["sweep", "--profile", "prof/profile.json", "sim/test.log", "--verdicts", "--out", "rep"],
    ));
    assert!(table.contains("binning"));
    let report = fs::read(dir.path().join("rep/report.json")).unwrap();
    let summary = fs::read(dir.path().join("rep/summary.csv")).unwrap();
    let points = fs::read(dir.path().join("rep/pr_points.csv")).unwrap();
    assert_eq!(fs::read_to_string(dir.path().join("rep/pr_points.csv")).unwrap().lines().count(), 1 + 2 * 4 * 18);

    ok(&canids(dir.path(), &["eval", "with=rep/verdicts_with.csv", "without=rep/verdicts_without.csv", "--out", "ev"]));
    assert_eq!(fs::read(dir.path().join("ev/report.json")).unwrap(), report);

    ok(&canids(dir.path(), &["report", "rep/report.json", "--out", "regen"]));
    assert_eq!(fs::read(dir.path().join("regen/summary.csv")).unwrap(), summary);
    assert_eq!(fs::read(dir.path().join("regen/pr_points.csv")).unwrap(), points);
    assert!(dir.path().join("regen/pr_binning_without.dat").is_file());

    let again = TempDir::new().unwrap();
    let again_dir = again.path().to_str().unwrap();
    ok(&canids(dir.path(), &["sweep", "--profile", "prof", "sim/test.log", "--out", again_dir]));
    assert_eq!(fs::read(again.path().join("report.json")).unwrap(), report);
}

#[test]
fn sweep_reports_unlabeled_captures() {
    let dir = trained();
    fs::copy(dir.path().join("sim/test.log"), dir.path().join("orphan.log")).unwrap();
    let out = canids(dir.path(), &["sweep", "--profile", "prof", "sim/test.log", "orphan.log", "--out", "rep"]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("orphan.log"), "{err}");
}

#[test]
fn stream_emits_alerts_and_skips_garbage() {
    let dir = trained();
    let mut child = Command::new(env!("CARGO_BIN_EXE_canids"))
        .args(["detect", "--profile", "prof", "--method", "binning", "--alpha", "3.5", "--stream"])
        .current_dir(dir.path())
        .env("RUST_LOG", "off")
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    let log = fs::read_to_string(dir.path().join("sim/test.log")).unwrap();
    let mut stdin = child.stdin.take().unwrap();
    let feeder = std::thread::spawn(move || {
        stdin.write_all(b"not a frame\n").unwrap();
        stdin.write_all(log.as_bytes()).unwrap();
    });
    let out = child.wait_with_output().unwrap();
    feeder.join().unwrap();
    let stdout = ok(&out);
    let alerts: Vec<&str> = stdout.lines().skip(1).collect();
    assert!(!alerts.is_empty());
    assert!(alerts.iter().all(|l| l.ends_with(",,1,binning,3.5")));
    assert!(alerts.iter().all(|l| l.split(',').nth(2) == Some("0D0")));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("malformed=1"), "{stderr}");
}

#[cfg(unix)]
#[test]
fn stream_interrupt_exits_cleanly() {
    use std::time::Duration;

    let dir = trained();
    let mut child = Command::new(env!("CARGO_BIN_EXE_canids"))
        .args(["detect", "--profile", "prof", "--method", "mean", "--alpha", "0.5", "--stream"])
        .current_dir(dir.path())
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    let mut stdin = child.stdin.take().unwrap();
    let mut stdout = BufReader::new(child.stdout.take().unwrap());
    let mut header = String::new();
    stdout.read_line(&mut header).unwrap();
    assert!(header.starts_with("frame_index,"));
    stdin.write_all(b"(0.000000) can0 0D0#00\n").unwrap();
    stdin.flush().unwrap();
    std::thread::sleep(Duration::from_millis(300));
    let status = Command::new("kill").args(["-INT", &child.id().to_string()]).status().unwrap();
    assert!(status.success());
    let out = child.wait_with_output().unwrap();
    drop(stdin);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("frames=1"));
}
