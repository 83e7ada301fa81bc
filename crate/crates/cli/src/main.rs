//! `canids`: train timing profiles, detect, simulate, sweep and evaluate.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::Value;

use canids_core::candump::{parse_log, write_log};
use canids_core::detect::{sweep, DetectorBank, SufficiencyRule};
use canids_core::eval::{
    build_report, read_verdict_csv, write_verdict_csv, EvalInput, EvalReport, LogTruth, RunVerdicts,
};
use canids_core::labels::{derive_labels, read_labeled_csv, write_labeled_csv, AttackMetadata};
use canids_core::road::{align_interval, RoadDataset};
use canids_core::sim::{
    desk_bus, desk_flam, generate_ambient, inject_attack, AttackKind, DEFAULT_FUZZ_MULTIPLIER, DESK_TARGET,
};
use canids_core::stream::{run_stream, StreamCounters};
use canids_core::{
    run_detector, train, CanFrame, DetectorConfig, LabeledFrame, Method, OutlierMode, ProfileSetF64, TrainingConfig,
    Variant,
};

const PROFILE_DIR_ENV: &str = "CANIDS_PROFILE_DIR";
const PROFILE_FILE: &str = "profile.json";

#[derive(Parser, Debug)]
#[command(name = "canids", version, about = "Timing-based intrusion detection for CAN buses")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Learn per-AID timing profiles from benign captures.
    Train(TrainArgs),
    /// Label every frame of a capture, or alert live on standard input.
    Detect(DetectArgs),
    /// Write a seeded synthetic training capture and attacked test capture.
    Simulate(SimulateArgs),
    /// Run methods over the threshold grid on labeled captures and evaluate.
    Sweep(SweepArgs),
    /// Evaluate verdict CSV files.
    Eval(EvalArgs),
    /// Regenerate report artifacts from report.json.
    Report(ReportArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Format {
    Candump,
    Csv,
}

impl Format {
    fn ext(self) -> &'static str {
        match self {
            Format::Candump => "log",
            Format::Csv => "csv",
        }
    }

    fn detect(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("csv") => Format::Csv,
            _ => Format::Candump,
        }
    }
}

#[derive(Args, Debug)]
struct ProfileArg {
    /// Profile file, or a directory holding profile.json.
    #[arg(long, env = PROFILE_DIR_ENV)]
    profile: Option<PathBuf>,
}

impl ProfileArg {
    fn path(&self) -> PathBuf {
        match &self.profile {
            Some(p) if p.is_dir() => p.join(PROFILE_FILE),
            Some(p) => p.clone(),
            None => PathBuf::from(PROFILE_FILE),
        }
    }

    fn load(&self) -> Result<ProfileSetF64> {
        let path = self.path();
        let text = fs::read_to_string(&path).with_context(|| format!("reading profile {}", path.display()))?;
        ProfileSetF64::from_json(&text).with_context(|| format!("loading profile {}", path.display()))
    }
}

#[derive(Args, Debug)]
struct TrainArgs {
    /// Benign captures.
    #[arg(required_unless_present = "road", conflicts_with = "road")]
    logs: Vec<PathBuf>,
    /// Train on the ambient dynamometer captures of a ROAD dataset directory.
    #[arg(long, value_name = "DIR")]
    road: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "both")]
    outliers: OutlierArg,
    /// Expected outlier fraction for MCD.
    #[arg(long)]
    contamination: Option<f64>,
    /// Input format; inferred from the extension when omitted.
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Output profile (default: profile.json in the profile directory).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum OutlierArg {
    With,
    Without,
    Both,
}

impl From<OutlierArg> for OutlierMode {
    fn from(a: OutlierArg) -> Self {
        match a {
            OutlierArg::With => OutlierMode::With,
            OutlierArg::Without => OutlierMode::Without,
            OutlierArg::Both => OutlierMode::Both,
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum MethodArg {
    Mean,
    Binning,
    Gaussian,
    Kde,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Mean => Method::Mean,
            MethodArg::Binning => Method::Binning,
            MethodArg::Gaussian => Method::Gaussian,
            MethodArg::Kde => Method::Kde,
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum VariantArg {
    With,
    Without,
}

impl From<VariantArg> for Variant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::With => Variant::WithOutliers,
            VariantArg::Without => Variant::WithoutOutliers,
        }
    }
}

#[derive(Args, Debug)]
struct DetectArgs {
    #[command(flatten)]
    profile: ProfileArg,
    #[arg(long, value_enum)]
    method: MethodArg,
    #[arg(long)]
    alpha: f64,
    /// Profile variant to detect with.
    #[arg(long, value_enum, default_value = "without")]
    outliers: VariantArg,
    /// Alert on AIDs absent from the profile.
    #[arg(long)]
    strict_unknown_aid: bool,
    /// Read candump lines from standard input and print alerts as they happen.
    #[arg(long, conflicts_with_all = ["input", "out", "metadata"])]
    stream: bool,
    /// Capture to label.
    #[arg(required_unless_present = "stream")]
    input: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Attack metadata used to fill the label column of a candump capture.
    #[arg(long)]
    metadata: Option<PathBuf>,
    /// Verdict CSV (default: standard output).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum AttackArg {
    Flam,
    Flood,
    Fuzz,
    None,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, value_enum, default_value = "flam")]
    attack: AttackArg,
    #[arg(long, value_enum, default_value = "candump")]
    format: Format,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[command(flatten)]
    profile: ProfileArg,
    /// Test captures (candump with metadata, or labeled CSV).
    #[arg(required_unless_present = "road", conflicts_with = "road")]
    logs: Vec<PathBuf>,
    /// Use the fabrication-attack captures of a ROAD dataset directory.
    #[arg(long, value_name = "DIR")]
    road: Option<PathBuf>,
    /// Attack metadata: one description, or a map keyed by capture name.
    /// Without it, `<capture>.json` next to each candump capture is used.
    #[arg(long)]
    metadata: Option<PathBuf>,
    /// Methods to run (default: all four).
    #[arg(long, value_enum, value_delimiter = ',')]
    method: Vec<MethodArg>,
    /// Thresholds replacing the default grid (single method only).
    #[arg(long, value_delimiter = ',')]
    alpha: Vec<f64>,
    #[arg(long, value_enum, default_value = "both")]
    outliers: OutlierArg,
    #[arg(long)]
    strict_unknown_aid: bool,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Also write verdicts_<variant>.csv.
    #[arg(long)]
    verdicts: bool,
    /// Output directory for report artifacts.
    #[arg(long, default_value = "report")]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct EvalArgs {
    /// Verdict CSV files, optionally tagged: `without=verdicts.csv`.
    #[arg(required = true)]
    verdicts: Vec<String>,
    #[arg(long, default_value = "report")]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct ReportArgs {
    /// A report.json written by sweep or eval.
    report: PathBuf,
    /// Output directory (default: next to the report).
    #[arg(long)]
    out: Option<PathBuf>,
}

fn ensure_exists(paths: &[PathBuf]) -> Result<()> {
    for p in paths {
        if !p.is_file() {
            bail!("{}: no such file", p.display());
        }
    }
    Ok(())
}

fn read_candump(path: &Path) -> Result<Vec<CanFrame>> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let parsed = parse_log(BufReader::new(file)).with_context(|| format!("reading {}", path.display()))?;
    if !parsed.rejected.is_empty() {
        log::warn!("{}: skipped {} malformed line(s)", path.display(), parsed.rejected.len());
        for e in parsed.rejected.iter().take(3) {
            log::debug!("{}: {e}", path.display());
        }
    }
    Ok(parsed.frames)
}

fn read_csv(path: &Path) -> Result<Vec<LabeledFrame>> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    read_labeled_csv(BufReader::new(file)).with_context(|| format!("reading {}", path.display()))
}

/// Frames of a capture, plus labels when the file carries them.
fn read_capture(path: &Path, format: Option<Format>) -> Result<(Vec<CanFrame>, Option<Vec<bool>>)> {
    match format.unwrap_or_else(|| Format::detect(path)) {
        Format::Candump => Ok((read_candump(path)?, None)),
        Format::Csv => {
            let rows = read_csv(path)?;
            let labels = rows.iter().map(|f| f.label).collect();
            Ok((rows.into_iter().map(|f| f.frame).collect(), Some(labels)))
        }
    }
}

fn default_profile_out() -> PathBuf {
    std::env::var_os(PROFILE_DIR_ENV)
        .map_or_else(|| PathBuf::from(PROFILE_FILE), |d| PathBuf::from(d).join(PROFILE_FILE))
}

fn cmd_train(args: TrainArgs) -> Result<()> {
    let logs = match &args.road {
        Some(dir) => {
            let logs = RoadDataset { root: dir.clone() }
                .training_logs()
                .with_context(|| format!("listing {}", dir.display()))?;
            if logs.is_empty() {
                bail!("{}: no ambient dynamometer captures", dir.display());
            }
            logs
        }
        None => args.logs.clone(),
    };
    ensure_exists(&logs)?;
    let mut config = TrainingConfig { outliers: args.outliers.into(), ..TrainingConfig::default() };
    if let Some(c) = args.contamination {
        config.contamination = c;
    }
    let mut captures = Vec::with_capacity(logs.len());
    for path in &logs {
        let (frames, _) = read_capture(path, args.format)?;
        log::info!("{}: {} frames", path.display(), frames.len());
        captures.push(frames);
    }
    if captures.iter().all(Vec::is_empty) {
        bail!("no parsable frames in {} capture(s)", captures.len());
    }
    let profiles: ProfileSetF64 = train(&captures, &config)?;
    let out = args.out.unwrap_or_else(default_profile_out);
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(&out, profiles.to_json()).with_context(|| format!("writing {}", out.display()))?;
    print!("{}", profiles.summary_table());
    eprintln!("wrote {} ({} AIDs)", out.display(), profiles.aids.len());
    Ok(())
}

fn read_metadata_file(path: &Path) -> Result<Value> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

/// Attack metadata for `capture`: a single description, or the entry keyed
/// by the capture's file stem.
fn metadata_for(doc: &Value, capture: &Path) -> Result<AttackMetadata> {
    if doc.get("injection_id").is_some() {
        return Ok(AttackMetadata::from_value(doc)?);
    }
    let stem = capture.file_stem().and_then(|s| s.to_str()).unwrap_or_default();
    let entry = doc.get(stem).ok_or_else(|| anyhow!("no metadata entry for `{stem}`"))?;
    Ok(AttackMetadata::from_value(entry)?)
}

fn sidecar(path: &Path) -> PathBuf {
    path.with_extension("json")
}

fn cmd_detect(args: DetectArgs) -> Result<()> {
    let method: Method = args.method.into();
    let config = DetectorConfig::new(method, args.alpha)?.with_strict_unknown_aid(args.strict_unknown_aid);
    if !method.on_grid(args.alpha) {
        log::info!("alpha {} is not on the {method} evaluation grid", args.alpha);
    }
    let counters = Arc::new(StreamCounters::default());
    if args.stream {
        let handler_counters = Arc::clone(&counters);
        // alerts are flushed as they are written; the main thread holds the
        // stdout lock, so only report and leave
        ctrlc::set_handler(move || {
            eprintln!("interrupted: {}", handler_counters.summary());
            std::process::exit(0);
        })
        .context("installing the interrupt handler")?;
    }
    let profiles = args.profile.load()?;
    let variant: Variant = args.outliers.into();
    if !profiles.has_variant(variant) {
        bail!("profile has no `{variant}` variant; retrain with --outliers {variant} or both");
    }
    let view = profiles.select(variant);

    if args.stream {
        let mut bank = DetectorBank::new(config, &view);
        let stdin = io::stdin();
        let stdout = io::stdout();
        let mut out = stdout.lock();
        match run_stream(stdin.lock(), &mut out, &mut bank, &counters) {
            Ok(()) => {}
            Err(e) if e.kind() == io::ErrorKind::BrokenPipe => {}
            Err(e) => return Err(e.into()),
        }
        eprintln!("{}", counters.summary());
        return Ok(());
    }

    let input = args.input.expect("required unless --stream");
    ensure_exists(std::slice::from_ref(&input))?;
    let (frames, mut labels) = read_capture(&input, args.format)?;
    if let Some(meta_path) = &args.metadata {
        let meta = align_interval(&metadata_for(&read_metadata_file(meta_path)?, &input)?, &frames);
        labels = Some(derive_labels(&frames, std::slice::from_ref(&meta)).iter().map(|f| f.label).collect());
    }
    let run = run_detector(config, &view, &frames);
    let cov = &run.coverage;
    if cov.unknown_aid > 0 {
        log::warn!("{} frame(s) from {} AID(s) absent from the profile", cov.unknown_aid, cov.unknown_aids.len());
    }
    let truth = LogTruth::new(&frames, labels.as_deref().unwrap_or(&vec![false; frames.len()]))?;
    let mut buf = String::new();
    let mut out: Box<dyn Write> = match &args.out {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    };
    canids_core::eval::write_verdict_header(&mut out)?;
    for (i, v) in run.verdicts.iter().enumerate() {
        buf.clear();
        let label = labels.as_ref().map(|l| l[i]);
        canids_core::eval::verdict_row(
            &mut buf,
            i,
            truth.timestamps[i],
            truth.aids[i],
            label,
            (*v).into(),
            method,
            args.alpha,
        );
        out.write_all(buf.as_bytes())?;
    }
    out.flush()?;
    eprintln!("{} frames, {} alerts", frames.len(), run.alerts.len());
    Ok(())
}

fn cmd_simulate(args: SimulateArgs) -> Result<()> {
    let train = generate_ambient(&desk_bus(args.seed))?;
    let test_seed = args.seed ^ 0x5DEE_CE66_D1CE_5EED;
    let ambient = generate_ambient(&desk_bus(test_seed))?;
    let mut attack = desk_flam(test_seed);
    attack.kind = match args.attack {
        AttackArg::Flam | AttackArg::None => attack.kind,
        AttackArg::Flood => AttackKind::FloodingTargeted { target: DESK_TARGET, multiplier: 2.0 },
        AttackArg::Fuzz => AttackKind::Fuzzing { multiplier: DEFAULT_FUZZ_MULTIPLIER },
    };
    let (test, meta) = if args.attack == AttackArg::None {
        (ambient, None)
    } else {
        let cap = inject_attack(&ambient, &attack)?;
        eprintln!("injected {} frames", cap.injected);
        (cap.frames, Some(cap.metadata))
    };
    fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    let write = |name: &str, frames: &[LabeledFrame]| -> Result<PathBuf> {
        let path = args.out.join(format!("{name}.{}", args.format.ext()));
        let file = BufWriter::new(File::create(&path).with_context(|| format!("creating {}", path.display()))?);
        match args.format {
            Format::Candump => {
                let plain: Vec<CanFrame> = frames.iter().map(|f| f.frame.clone()).collect();
                write_log(&plain, file)?;
            }
            Format::Csv => write_labeled_csv(frames, file)?,
        }
        Ok(path)
    };
    println!("{}", write("train", &train)?.display());
    let test_path = write("test", &test)?;
    println!("{}", test_path.display());
    if let Some(meta) = meta {
        let path = sidecar(&test_path);
        fs::write(&path, meta.to_json()).with_context(|| format!("writing {}", path.display()))?;
        println!("{}", path.display());
    }
    Ok(())
}

/// A labeled test capture.
struct TestCapture {
    name: String,
    frames: Vec<CanFrame>,
    labels: Vec<bool>,
}

fn load_test_captures(args: &SweepArgs) -> Result<Vec<TestCapture>> {
    if let Some(dir) = &args.road {
        let ds = RoadDataset { root: dir.clone() };
        let meta = ds.metadata()?;
        let logs = ds.test_logs().with_context(|| format!("listing {}", dir.display()))?;
        let mut out = Vec::new();
        let mut failures = 0;
        for path in logs {
            match ds.load_test_log(&path, &meta) {
                Ok(cap) => out.push(TestCapture {
                    name: cap.name,
                    labels: cap.frames.iter().map(|f| f.label).collect(),
                    frames: cap.frames.into_iter().map(|f| f.frame).collect(),
                }),
                Err(e) => {
                    eprintln!("error: {}: {e}", path.display());
                    failures += 1;
                }
            }
        }
        if failures > 0 {
            bail!("{failures} capture(s) could not be labeled");
        }
        return Ok(out);
    }

    ensure_exists(&args.logs)?;
    let shared = args.metadata.as_deref().map(read_metadata_file).transpose()?;
    let mut out = Vec::new();
    let mut failures = 0;
    for path in &args.logs {
        let loaded = (|| -> Result<TestCapture> {
            let (frames, labels) = read_capture(path, args.format)?;
            let labels = match labels {
                Some(l) => l,
                None => {
                    let doc = match &shared {
                        Some(d) => d.clone(),
                        None => read_metadata_file(&sidecar(path)).context("no --metadata and no sidecar metadata")?,
                    };
                    let meta = align_interval(&metadata_for(&doc, path)?, &frames);
                    derive_labels(&frames, std::slice::from_ref(&meta)).iter().map(|f| f.label).collect()
                }
            };
            let name = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default().to_owned();
            Ok(TestCapture { name, frames, labels })
        })();
        match loaded {
            Ok(c) => out.push(c),
            Err(e) => {
                eprintln!("error: {}: {e:#}", path.display());
                failures += 1;
            }
        }
    }
    if failures > 0 {
        bail!("{failures} capture(s) could not be labeled");
    }
    Ok(out)
}

fn cmd_sweep(args: SweepArgs) -> Result<()> {
    let methods: Vec<Method> =
        if args.method.is_empty() { Method::ALL.to_vec() } else { args.method.iter().map(|&m| m.into()).collect() };
    if !args.alpha.is_empty() {
        if methods.len() != 1 {
            bail!("--alpha overrides the grid of a single --method");
        }
        for &a in &args.alpha {
            methods[0].check_alpha(a)?;
        }
    }
    let profiles = args.profile.load()?;
    let captures = load_test_captures(&args)?;
    if captures.is_empty() {
        bail!("no test captures");
    }
    let logs: Vec<LogTruth> = captures.iter().map(|c| LogTruth::new(&c.frames, &c.labels)).collect::<Result<_, _>>()?;
    let frames: Vec<&[CanFrame]> = captures.iter().map(|c| c.frames.as_slice()).collect();
    for c in &captures {
        log::info!("{}: {} frames, {} labeled attack", c.name, c.frames.len(), c.labels.iter().filter(|&&l| l).count());
    }

    let mode: OutlierMode = args.outliers.into();
    let mut inputs = Vec::new();
    for &variant in mode.variants() {
        if !profiles.has_variant(variant) {
            bail!("profile has no `{variant}` variant");
        }
        let view = profiles.select(variant);
        let mut runs = Vec::new();
        for &method in &methods {
            let alphas = if args.alpha.is_empty() { method.grid() } else { args.alpha.clone() };
            let (sweeps, coverage) =
                sweep(method, &alphas, &view, &frames, SufficiencyRule::default(), args.strict_unknown_aid);
            if coverage.unknown_aid > 0 {
                log::warn!("{variant}/{method}: {} frame(s) from unprofiled AIDs", coverage.unknown_aid);
            }
            runs.extend(sweeps.iter().map(|s| RunVerdicts::from_sweep(method, s)));
        }
        inputs.push(EvalInput { variant: Some(variant.short().to_owned()), logs: logs.clone(), runs });
    }

    fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    if args.verdicts {
        for input in &inputs {
            let tag = input.variant.as_deref().unwrap_or("all");
            let path = args.out.join(format!("verdicts_{tag}.csv"));
            let file = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
            write_verdict_csv(input, BufWriter::new(file))?;
        }
    }
    finish_report(build_report(&inputs)?, &args.out)
}

fn finish_report(report: EvalReport, out: &Path) -> Result<()> {
    let written = report.write_artifacts(out).with_context(|| format!("writing artifacts to {}", out.display()))?;
    print!("{}", report.summary_table());
    for p in written {
        eprintln!("wrote {}", p.display());
    }
    Ok(())
}

fn cmd_eval(args: EvalArgs) -> Result<()> {
    let mut inputs = Vec::new();
    let mut seen = BTreeMap::new();
    for spec in &args.verdicts {
        let (variant, path) = match spec.split_once('=') {
            Some((v, p)) if !v.is_empty() && !Path::new(spec).exists() => (Some(v.to_owned()), PathBuf::from(p)),
            _ => (None, PathBuf::from(spec)),
        };
        if seen.insert(variant.clone(), ()).is_some() {
            bail!("variant `{}` given twice", variant.as_deref().unwrap_or("(untagged)"));
        }
        ensure_exists(std::slice::from_ref(&path))?;
        let file = File::open(&path).with_context(|| format!("opening {}", path.display()))?;
        let input =
            read_verdict_csv(BufReader::new(file), variant).with_context(|| format!("reading {}", path.display()))?;
        inputs.push(input);
    }
    finish_report(build_report(&inputs)?, &args.out)
}

fn cmd_report(args: ReportArgs) -> Result<()> {
    let text = fs::read_to_string(&args.report).with_context(|| format!("reading {}", args.report.display()))?;
    let report = EvalReport::from_json(&text).with_context(|| format!("parsing {}", args.report.display()))?;
    let out = args.out.unwrap_or_else(|| args.report.parent().map_or_else(|| PathBuf::from("."), Path::to_path_buf));
    finish_report(report, &out)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train(a) => cmd_train(a),
        Command::Detect(a) => cmd_detect(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Report(a) => cmd_report(a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let _ = io::stdout().flush();
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
