//! Command-line front end.
//!
//! Every command writes a [`RunManifest`] next to its outputs. Re-running the
//! recorded `args` from the same working directory reproduces the outputs
//! byte for byte. Exit codes: 0 success, 1 data or runtime error, 2 usage or
//! configuration error.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::baselines::{run_baseline, BaselineMethod, BaselineParams, DEFAULT_SCAN_WINDOW};
use crate::error::Error;
use crate::evaluation::{compare, read_labels, read_scores, write_auc_csv, write_roc_csv};
use crate::regression::{fit_all, Method, ModelSet, RegressorConfig};
use crate::scoring::{calibrate_delta, detect_all, write_band, write_scores, BoundMode, CalibrationConfig, DetectParams, Side};
use crate::simulator::{generate, preset, Preset, SimulationConfig};
use crate::stream::{parse_stream_with_header, window_stream, EventStream, WindowedStream};

/// Window length used when neither the flag nor the stream header sets one: one day in seconds.
pub const DEFAULT_WINDOW_LENGTH: f64 = 86_400.0;

const MANIFEST_SUFFIX: &str = ".manifest.json";

#[derive(Debug, Parser)]
#[command(name = "cliquewatch", version, about = "Node-level anomaly detection on clique streams")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic labelled stream.
    Simulate(SimulateArgs),
    /// Fit one conditional model per node.
    Train(TrainArgs),
    /// Choose delta by cross-validated false positive rate.
    Calibrate(CalibrateArgs),
    /// Score every (node, window) pair against its confidence band.
    Detect(DetectArgs),
    /// Score with a baseline detector.
    Baseline(BaselineArgs),
    /// ROC curves and AUC for score files against labels.
    Evaluate(EvaluateArgs),
}

#[derive(Debug, Args)]
pub struct StreamArgs {
    /// Event stream in JSONL format.
    #[arg(long)]
    pub stream: PathBuf,
    /// Number of nodes, for streams without a header record.
    #[arg(long)]
    pub node_count: Option<usize>,
    /// Window length in stream time units [default: header hint, else 86400].
    #[arg(long)]
    pub window_length: Option<f64>,
    /// Start of window 0.
    #[arg(long, default_value_t = 0.0)]
    pub origin: f64,
}

#[derive(Debug, Args)]
pub struct RegressorArgs {
    /// Regression method.
    #[arg(long, value_enum, default_value_t = Method::Forest)]
    pub method: Method,
    /// Base seed; node j uses seed + j.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Trees per forest.
    #[arg(long, default_value_t = 100)]
    pub forest_size: usize,
    /// Maximum tree depth, 0 for unlimited.
    #[arg(long, default_value_t = 12)]
    pub max_depth: usize,
    /// Minimum weighted samples per leaf.
    #[arg(long, default_value_t = 5)]
    pub min_leaf: usize,
    /// Kernel bandwidth.
    #[arg(long, default_value_t = 1.0)]
    pub bandwidth: f64,
}

impl RegressorArgs {
    pub fn config(&self) -> RegressorConfig {
        RegressorConfig {
            method: self.method,
            forest_size: self.forest_size,
            max_depth: self.max_depth,
            min_leaf: self.min_leaf,
            bandwidth: self.bandwidth,
            seed: self.seed,
        }
    }
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Built-in experiment preset.
    #[arg(long, value_enum, ignore_case = true, required_unless_present = "config", conflicts_with = "config")]
    pub preset: Option<Preset>,
    /// Simulation config in TOML.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Event seed; overrides the seed of a config file [default: 0].
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    /// Skip the oracle file.
    #[arg(long)]
    pub no_oracle: bool,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub input: StreamArgs,
    #[command(flatten)]
    pub regressor: RegressorArgs,
    /// Model file to write.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    #[command(flatten)]
    pub input: StreamArgs,
    #[command(flatten)]
    pub regressor: RegressorArgs,
    /// Acceptable false positive rate.
    #[arg(long, default_value_t = 0.05)]
    pub target_fpr: f64,
    /// Cross-validation folds over windows.
    #[arg(long, default_value_t = 5)]
    pub folds: usize,
    #[arg(long, value_enum, default_value_t = BoundMode::Plugin)]
    pub mode: BoundMode,
    #[arg(long, value_enum, default_value_t = Side::Bilateral)]
    pub side: Side,
    /// Calibration result (JSON).
    #[arg(long, default_value = "calibration.json")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct DetectArgs {
    /// Model file written by `train`.
    #[arg(long)]
    pub model: PathBuf,
    #[command(flatten)]
    pub input: StreamArgs,
    /// Level of the confidence bands, in (0, 1).
    #[arg(long, default_value_t = 0.01)]
    pub delta: f64,
    #[arg(long, value_enum, default_value_t = BoundMode::Plugin)]
    pub mode: BoundMode,
    #[arg(long, value_enum, default_value_t = Side::Bilateral)]
    pub side: Side,
    /// `all` or a comma-separated list of node indices.
    #[arg(long, default_value = "all")]
    pub nodes: String,
    /// Rank unilateral detections with the squared-deviation score.
    #[arg(long)]
    pub unilateral_squared: bool,
    /// Score CSV to write.
    #[arg(long)]
    pub out: PathBuf,
    /// Directory for per-node band CSVs [default: <out stem>_bands next to --out].
    #[arg(long)]
    pub bands: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BaselineArgs {
    #[arg(long, value_enum)]
    pub method: BaselineMethod,
    #[command(flatten)]
    pub input: StreamArgs,
    /// Normal stream preceding --stream; required by scan-batch.
    #[arg(long)]
    pub train: Option<PathBuf>,
    /// Scan lookback in windows.
    #[arg(long, default_value_t = DEFAULT_SCAN_WINDOW)]
    pub window: usize,
    #[arg(long, value_enum, default_value_t = Side::Bilateral)]
    pub side: Side,
    /// Score CSV to write.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Score CSVs; each file's stem names its method.
    #[arg(long, num_args = 1.., required = true)]
    pub scores: Vec<PathBuf>,
    /// Labels CSV.
    #[arg(long)]
    pub labels: PathBuf,
    /// Output directory for roc.csv and auc.csv.
    #[arg(long)]
    pub out: PathBuf,
}

/// Failure with its exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        CliError {
            code: 2,
            message: message.into(),
        }
    }

    pub fn data(message: impl Into<String>) -> Self {
        CliError {
            code: 1,
            message: message.into(),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) | Error::Domain(_) => CliError::usage(e.to_string()),
            _ => CliError::data(e.to_string()),
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.message)
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn io_error(path: &Path, e: std::io::Error) -> CliError {
    CliError::data(format!("{}: {e}", path.display()))
}

/// File path with its SHA-256.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileRecord {
    pub path: String,
    pub sha256: String,
}

impl FileRecord {
    pub fn of(path: &Path) -> CliResult<FileRecord> {
        let bytes = std::fs::read(path).map_err(|e| io_error(path, e))?;
        Ok(FileRecord {
            path: path.display().to_string(),
            sha256: hex::encode(Sha256::digest(&bytes)),
        })
    }
}

/// Record of one command run; contains no timestamps.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    /// Arguments after the program name.
    pub args: Vec<String>,
    /// Resolved settings, defaults included.
    pub config: serde_json::Value,
    pub seeds: BTreeMap<String, u64>,
    pub inputs: Vec<FileRecord>,
    pub outputs: Vec<FileRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub result: Option<serde_json::Value>,
}

impl RunManifest {
    pub fn read(path: &Path) -> CliResult<RunManifest> {
        let text = read_input(path)?;
        serde_json::from_str(&text).map_err(|e| CliError::data(format!("{}: {e}", path.display())))
    }
}

/// Manifest path for a file output: `<out>.manifest.json`.
pub fn manifest_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(MANIFEST_SUFFIX);
    PathBuf::from(name)
}

struct Run {
    command: &'static str,
    args: Vec<String>,
    config: serde_json::Value,
    seeds: BTreeMap<String, u64>,
    inputs: Vec<PathBuf>,
    outputs: Vec<PathBuf>,
    result: Option<serde_json::Value>,
}

impl Run {
    fn new(command: &'static str, args: &[String]) -> Run {
        Run {
            command,
            args: args.to_vec(),
            config: serde_json::Value::Null,
            seeds: BTreeMap::new(),
            inputs: Vec::new(),
            outputs: Vec::new(),
            result: None,
        }
    }

    fn finish(self, manifest: &Path) -> CliResult<()> {
        let records = |paths: &[PathBuf]| paths.iter().map(|p| FileRecord::of(p)).collect::<CliResult<Vec<_>>>();
        let m = RunManifest {
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: self.command.into(),
            args: self.args,
            config: self.config,
            seeds: self.seeds,
            inputs: records(&self.inputs)?,
            outputs: records(&self.outputs)?,
            result: self.result,
        };
        let mut text = serde_json::to_string_pretty(&m).map_err(|e| CliError::data(e.to_string()))?;
        text.push('\n');
        std::fs::write(manifest, text).map_err(|e| io_error(manifest, e))
    }
}

fn to_json<T: Serialize>(value: &T) -> serde_json::Value {
    serde_json::to_value(value).expect("settings serialize to JSON")
}

/// Reads an input file; a missing file is a usage error.
fn read_input(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => CliError::usage(format!("input file not found: {}", path.display())),
        _ => io_error(path, e),
    })
}

fn open_input(path: &Path) -> CliResult<File> {
    File::open(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => CliError::usage(format!("input file not found: {}", path.display())),
        _ => io_error(path, e),
    })
}

fn create_output(path: &Path) -> CliResult<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
    }
    File::create(path).map(BufWriter::new).map_err(|e| io_error(path, e))
}

#[derive(Serialize)]
struct WindowSettings {
    window_length: f64,
    window_length_source: &'static str,
    origin: f64,
}

struct LoadedStream {
    stream: EventStream,
    windows: WindowSettings,
}

fn load_stream(path: &Path, args: &StreamArgs) -> CliResult<LoadedStream> {
    let text = read_input(path)?;
    let (header, stream) = parse_stream_with_header(&text, args.node_count)?;
    let (window_length, source) = match (args.window_length, header.window_length) {
        (Some(w), _) => (w, "flag"),
        (None, Some(w)) => (w, "header"),
        (None, None) => (DEFAULT_WINDOW_LENGTH, "default"),
    };
    if !(window_length > 0.0 && window_length.is_finite()) {
        return Err(CliError::usage(format!("window length must be positive, got {window_length}")));
    }
    if !args.origin.is_finite() {
        return Err(CliError::usage("origin must be finite"));
    }
    Ok(LoadedStream {
        stream,
        windows: WindowSettings {
            window_length,
            window_length_source: source,
            origin: args.origin,
        },
    })
}

fn windowed(loaded: LoadedStream) -> CliResult<(WindowedStream, WindowSettings)> {
    if loaded.stream.is_empty() {
        return Err(CliError::data("stream contains no events"));
    }
    let w = window_stream(loaded.stream, loaded.windows.window_length, loaded.windows.origin)?;
    Ok((w, loaded.windows))
}

fn parse_nodes(spec: &str, node_count: usize) -> CliResult<Vec<usize>> {
    if spec.trim() == "all" {
        return Ok((0..node_count).collect());
    }
    let mut nodes = Vec::new();
    for part in spec.split(',') {
        let j: usize = part
            .trim()
            .parse()
            .map_err(|_| CliError::usage(format!("invalid node index {part:?} in --nodes")))?;
        if j >= node_count {
            return Err(CliError::usage(format!("node {j} out of range for {node_count} nodes")));
        }
        if !nodes.contains(&j) {
            nodes.push(j);
        }
    }
    nodes.sort_unstable();
    Ok(nodes)
}

fn simulate(a: &SimulateArgs, run: &mut Run) -> CliResult<()> {
    let config = match (&a.preset, &a.config) {
        (Some(p), _) => preset(*p, a.seed.unwrap_or(0)),
        (None, Some(path)) => {
            run.inputs.push(path.clone());
            let mut c = SimulationConfig::from_toml(&read_input(path)?)?;
            if let Some(s) = a.seed {
                c.seed = s;
            }
            c
        }
        (None, None) => return Err(CliError::usage("one of --preset or --config is required")),
    };
    config.validate()?;
    run.config = serde_json::json!({
        "preset": a.preset.map(|p| p.as_str()),
        "simulation": to_json(&config),
        "oracle": !a.no_oracle,
    });
    run.seeds.insert("seed".into(), config.seed);
    run.seeds.insert("layout_seed".into(), config.layout_seed);
    let sim = generate(&config)?;
    run.outputs = sim.write_all(&a.out, !a.no_oracle)?;
    eprintln!(
        "simulated {} events over {} timestamps into {}",
        sim.stream.len(),
        config.timestamps,
        a.out.display()
    );
    Ok(())
}

fn train(a: &TrainArgs, run: &mut Run) -> CliResult<()> {
    let config = a.regressor.config();
    config.validate()?;
    run.inputs.push(a.input.stream.clone());
    let loaded = load_stream(&a.input.stream, &a.input)?;
    if loaded.stream.is_empty() {
        return Err(CliError::data("training stream contains no events"));
    }
    run.config = serde_json::json!({ "regressor": to_json(&config), "windows": to_json(&loaded.windows) });
    run.seeds.insert("seed".into(), config.seed);
    let models = fit_all(&loaded.stream, &config)?;
    let mut out = create_output(&a.out)?;
    models.save(&mut out)?;
    out.flush().map_err(|e| io_error(&a.out, e))?;
    run.outputs.push(a.out.clone());
    eprintln!("fitted {} models into {}", models.node_count(), a.out.display());
    Ok(())
}

fn calibrate(a: &CalibrateArgs, run: &mut Run) -> CliResult<()> {
    let config = a.regressor.config();
    config.validate()?;
    if !(a.target_fpr > 0.0 && a.target_fpr <= 1.0) {
        return Err(CliError::usage(format!("--target-fpr must lie in (0, 1], got {}", a.target_fpr)));
    }
    if a.folds < 2 {
        return Err(CliError::usage(format!("--folds must be at least 2, got {}", a.folds)));
    }
    run.inputs.push(a.input.stream.clone());
    let loaded = load_stream(&a.input.stream, &a.input)?;
    if loaded.stream.is_empty() {
        return Err(CliError::data("stream contains no events"));
    }
    let cal = CalibrationConfig {
        target_fpr: a.target_fpr,
        folds: a.folds,
        mode: a.mode,
        side: a.side,
        window_length: loaded.windows.window_length,
        origin: loaded.windows.origin,
    };
    run.config = serde_json::json!({
        "regressor": to_json(&config),
        "calibration": to_json(&cal),
        "windows": to_json(&loaded.windows),
    });
    run.seeds.insert("seed".into(), config.seed);
    let result = calibrate_delta(&loaded.stream, &config, &cal)?;
    let mut out = create_output(&a.out)?;
    serde_json::to_writer_pretty(&mut out, &result).map_err(|e| CliError::data(e.to_string()))?;
    writeln!(out).and_then(|_| out.flush()).map_err(|e| io_error(&a.out, e))?;
    run.outputs.push(a.out.clone());
    run.result = Some(serde_json::json!({ "delta": result.delta, "achieved": result.achieved }));
    if !result.achieved {
        eprintln!("no grid value met the target; using the smallest");
    }
    println!("{}", result.delta);
    Ok(())
}

fn bands_dir(a: &DetectArgs) -> PathBuf {
    a.bands.clone().unwrap_or_else(|| {
        let stem = a.out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        a.out.with_file_name(format!("{stem}_bands"))
    })
}

fn detect(a: &DetectArgs, run: &mut Run) -> CliResult<()> {
    let params = DetectParams {
        delta: a.delta,
        mode: a.mode,
        side: a.side,
        squared_unilateral: a.unilateral_squared,
    };
    params
        .validate()
        .map_err(|e| CliError::usage(format!("--delta: {e}")))?;
    run.inputs.push(a.model.clone());
    run.inputs.push(a.input.stream.clone());
    let models = ModelSet::load(std::io::BufReader::new(open_input(&a.model)?))?;
    let loaded = load_stream(&a.input.stream, &a.input)?;
    if loaded.stream.node_count() != models.node_count() {
        return Err(CliError::data(format!(
            "model covers {} nodes but the stream has {}",
            models.node_count(),
            loaded.stream.node_count()
        )));
    }
    let nodes = parse_nodes(&a.nodes, models.node_count())?;
    let (windows, settings) = windowed(loaded)?;
    run.config = serde_json::json!({
        "detect": to_json(&params),
        "nodes": nodes,
        "windows": to_json(&settings),
        "regressor": to_json(models.config()),
    });
    let results = detect_all(&models, &windows, &nodes, &params)?;

    let mut out = create_output(&a.out)?;
    write_scores(&mut out, results.iter().flatten().map(|(v, _)| v))?;
    out.flush().map_err(|e| io_error(&a.out, e))?;
    run.outputs.push(a.out.clone());

    let dir = bands_dir(a);
    for (&j, rows) in nodes.iter().zip(&results) {
        let path = dir.join(format!("node_{j}.csv"));
        let mut w = create_output(&path)?;
        write_band(&mut w, rows)?;
        w.flush().map_err(|e| io_error(&path, e))?;
        run.outputs.push(path);
    }
    let flagged = results.iter().flatten().filter(|(v, _)| v.is_anomaly).count();
    eprintln!(
        "{flagged} of {} (node, window) pairs flagged at delta {}",
        results.iter().map(Vec::len).sum::<usize>(),
        a.delta
    );
    Ok(())
}

fn baseline(a: &BaselineArgs, run: &mut Run) -> CliResult<()> {
    if a.method == BaselineMethod::ScanBatch && a.train.is_none() {
        return Err(CliError::usage("scan-batch requires --train"));
    }
    if matches!(a.method, BaselineMethod::Scan) && a.window < 2 {
        return Err(CliError::usage(format!("--window must be at least 2, got {}", a.window)));
    }
    let params = BaselineParams {
        method: a.method,
        window: a.window,
        side: a.side,
    };
    run.inputs.push(a.input.stream.clone());
    let (target, settings) = windowed(load_stream(&a.input.stream, &a.input)?)?;
    let context = match &a.train {
        Some(path) => {
            run.inputs.push(path.clone());
            let loaded = load_stream(path, &a.input)?;
            Some(windowed(loaded)?.0)
        }
        None => None,
    };
    run.config = serde_json::json!({ "baseline": to_json(&params), "windows": to_json(&settings) });
    let table = run_baseline(&target, context.as_ref(), &params)?;
    let mut out = create_output(&a.out)?;
    table.write_csv(&mut out, a.side)?;
    out.flush().map_err(|e| io_error(&a.out, e))?;
    run.outputs.push(a.out.clone());
    eprintln!(
        "{} scores for {} nodes over {} windows",
        a.method.as_str(),
        table.node_count(),
        table.window_indices.len()
    );
    Ok(())
}

fn evaluate(a: &EvaluateArgs, run: &mut Run) -> CliResult<()> {
    let labels = read_labels(open_input(&a.labels)?)?;
    run.inputs.push(a.labels.clone());
    let mut methods = Vec::new();
    for path in &a.scores {
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .ok_or_else(|| CliError::usage(format!("cannot name method from {}", path.display())))?;
        if methods.iter().any(|(m, _)| *m == name) {
            return Err(CliError::usage(format!("two score files are named {name:?}")));
        }
        let table = read_scores(open_input(path)?).map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
        run.inputs.push(path.clone());
        methods.push((name, table));
    }
    run.config = serde_json::json!({ "methods": methods.iter().map(|(m, _)| m).collect::<Vec<_>>() });
    let results = compare(&methods, &labels)?;
    std::fs::create_dir_all(&a.out).map_err(|e| io_error(&a.out, e))?;
    let roc_path = a.out.join("roc.csv");
    let auc_path = a.out.join("auc.csv");
    let mut roc = create_output(&roc_path)?;
    write_roc_csv(&mut roc, &results)?;
    roc.flush().map_err(|e| io_error(&roc_path, e))?;
    let mut auc = create_output(&auc_path)?;
    write_auc_csv(&mut auc, &results)?;
    auc.flush().map_err(|e| io_error(&auc_path, e))?;
    run.outputs.extend([roc_path, auc_path]);
    run.result = Some(
        results
            .iter()
            .map(|r| (r.method.clone(), serde_json::json!(r.auc)))
            .collect::<serde_json::Map<_, _>>()
            .into(),
    );
    for r in &results {
        println!("{}\t{:.4}", r.method, r.auc);
    }
    Ok(())
}

/// Runs a parsed command; `args` are recorded in the manifest.
pub fn run(cli: &Cli, args: &[String]) -> CliResult<()> {
    match &cli.command {
        Command::Simulate(a) => {
            let mut r = Run::new("simulate", args);
            simulate(a, &mut r)?;
            r.finish(&a.out.join("manifest.json"))
        }
        Command::Train(a) => {
            let mut r = Run::new("train", args);
            train(a, &mut r)?;
            r.finish(&manifest_path(&a.out))
        }
        Command::Calibrate(a) => {
            let mut r = Run::new("calibrate", args);
            calibrate(a, &mut r)?;
            r.finish(&manifest_path(&a.out))
        }
        Command::Detect(a) => {
            let mut r = Run::new("detect", args);
            detect(a, &mut r)?;
            r.finish(&manifest_path(&a.out))
        }
        Command::Baseline(a) => {
            let mut r = Run::new("baseline", args);
            baseline(a, &mut r)?;
            r.finish(&manifest_path(&a.out))
        }
        Command::Evaluate(a) => {
            let mut r = Run::new("evaluate", args);
            evaluate(a, &mut r)?;
            r.finish(&a.out.join("manifest.json"))
        }
    }
}

/// Parses `argv` (program name first), runs it and returns the exit code.
pub fn main_with<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let args: Vec<String> = argv.iter().skip(1).map(|a| a.to_string_lossy().into_owned()).collect();
    match run(&cli, &args) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.code
        }
    }
}
