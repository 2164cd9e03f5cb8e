//! Command-line front end: run configuration, subcommands and exit codes.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::derive_seed;
use crate::detectors::{
    batch_detect_stream, calibrate_threshold_supervised, calibrate_threshold_unsupervised,
    model_feature_mode, train_detector_model, AnomalyDetector, DetectError, NoveltyDetector, VerdictWriter,
    DEFAULT_QUANTILE, DEFAULT_RECALL_FLOOR,
};
use crate::eval::experiments::{prepare_corpus, run_experiment, ExperimentConfig, ExperimentError, EXPERIMENTS};
use crate::features::{featurize, FeatureError, FeatureMatrix, FeatureMode, FEATURE_SCHEMA_VERSION};
use crate::flow::{load_dataset, AttackLabel, FlowDataset, FlowError, FlowFormat, FlowReader};
use crate::graph::{compute_node_features, NetworkGraph, NodeFeatureConfig, NodeFeatureTable};
use crate::neural::{AEModel, ModelRole, NeuralError, TrainConfig, MODEL_FORMAT_VERSION};
use crate::synth::{generate_corpus, CorpusSpec, Manifest, SynthError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_IO: i32 = 3;
pub const EXIT_CONTAMINATION: i32 = 4;
pub const EXIT_DIVERGENCE: i32 = 5;
pub const EXIT_SCHEMA: i32 = 6;

// seed streams for the train subcommand
const S_TRAIN_AD: usize = 101;
const S_TRAIN_ND: usize = 102;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("io error: {0}")]
    Io(String),
    #[error("{0}")]
    Contamination(String),
    #[error("{0}")]
    Divergence(String),
    #[error("schema error: {0}")]
    Schema(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Io(_) => EXIT_IO,
            CliError::Contamination(_) => EXIT_CONTAMINATION,
            CliError::Divergence(_) => EXIT_DIVERGENCE,
            CliError::Schema(_) => EXIT_SCHEMA,
        }
    }
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

impl From<FlowError> for CliError {
    fn from(e: FlowError) -> Self {
        match e {
            FlowError::Io(_) => CliError::Io(e.to_string()),
            FlowError::Csv(ref c) if c.is_io_error() => CliError::Io(e.to_string()),
            FlowError::InvalidFraction(_) => CliError::Config(e.to_string()),
            _ => CliError::Schema(e.to_string()),
        }
    }
}

impl From<FeatureError> for CliError {
    fn from(e: FeatureError) -> Self {
        match e {
            FeatureError::Csv(ref c) if c.is_io_error() => CliError::Io(e.to_string()),
            _ => CliError::Schema(e.to_string()),
        }
    }
}

impl From<NeuralError> for CliError {
    fn from(e: NeuralError) -> Self {
        match e {
            NeuralError::NonFiniteLoss { .. } => CliError::Divergence(e.to_string()),
            NeuralError::Io(_) => CliError::Io(e.to_string()),
            NeuralError::DimensionMismatch { .. }
            | NeuralError::VersionMismatch { .. }
            | NeuralError::ChecksumMismatch
            | NeuralError::Corrupt(_) => CliError::Schema(e.to_string()),
            NeuralError::EmptyMatrix | NeuralError::InsufficientData { .. } | NeuralError::InvalidConfig(_) => {
                CliError::Config(e.to_string())
            }
        }
    }
}

impl From<DetectError> for CliError {
    fn from(e: DetectError) -> Self {
        match e {
            DetectError::LabelContamination { .. } => CliError::Contamination(e.to_string()),
            DetectError::SchemaMismatch(_) | DetectError::LengthMismatch { .. } => CliError::Schema(e.to_string()),
            DetectError::Neural(n) => n.into(),
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<ExperimentError> for CliError {
    fn from(e: ExperimentError) -> Self {
        match e {
            ExperimentError::Flow(e) => e.into(),
            ExperimentError::Feature(e) => e.into(),
            ExperimentError::Neural(e) => e.into(),
            ExperimentError::Detect(e) => e.into(),
            ExperimentError::Metric(e) => CliError::Config(e.to_string()),
            ExperimentError::Setup(m) => CliError::Config(m),
        }
    }
}

impl From<SynthError> for CliError {
    fn from(e: SynthError) -> Self {
        CliError::Config(e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum CalibrationMode {
    /// Quantile of the losses of rows the model was meant to reconstruct.
    Quantile,
    /// Maximum precision subject to a recall floor, from labeled rows.
    Supervised,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CalibrationConfig {
    pub mode: CalibrationMode,
    pub quantile: f64,
    pub recall_floor: f64,
}

impl Default for CalibrationConfig {
    fn default() -> Self {
        Self {
            mode: CalibrationMode::Quantile,
            quantile: DEFAULT_QUANTILE,
            recall_floor: DEFAULT_RECALL_FLOOR,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathsConfig {
    /// Directory written by `gen` (manifest.json plus one CSV per network).
    pub corpus: Option<PathBuf>,
    pub model_dir: Option<PathBuf>,
    pub report_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainBlocks {
    pub ad: TrainConfig,
    pub novelty: TrainConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSection {
    pub train_fraction: f64,
    pub holdout_prevalence: f64,
    pub holdout_classes: Vec<String>,
    pub ad_recall_floor: f64,
    pub histogram_bins: usize,
}

/// Everything a run needs besides its input files. Relative paths are
/// resolved against the directory of the config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Root seed. Training and experiment seeds derive from it; the `seed`
    /// fields inside `train` blocks are ignored.
    pub seed: u64,
    pub feature_mode: FeatureMode,
    pub paths: PathsConfig,
    pub train: TrainBlocks,
    pub calibration: CalibrationConfig,
    pub graph: NodeFeatureConfig,
    pub experiment: ExperimentSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        let e = ExperimentConfig::default();
        Self {
            seed: e.seed,
            feature_mode: e.feature_mode,
            paths: PathsConfig::default(),
            train: TrainBlocks {
                ad: e.ad_train,
                novelty: e.nd_train,
            },
            calibration: CalibrationConfig {
                mode: CalibrationMode::Quantile,
                quantile: e.ad_quantile,
                recall_floor: e.nd_recall_floor,
            },
            graph: e.graph,
            experiment: ExperimentSection {
                train_fraction: e.train_fraction,
                holdout_prevalence: e.holdout_prevalence,
                holdout_classes: e.holdout_classes,
                ad_recall_floor: e.ad_recall_floor,
                histogram_bins: e.histogram_bins,
            },
        }
    }
}

impl Default for TrainBlocks {
    fn default() -> Self {
        RunConfig::default().train
    }
}

impl Default for ExperimentSection {
    fn default() -> Self {
        RunConfig::default().experiment
    }
}

impl RunConfig {
    /// Reads a TOML config, applies the seed override and resolves paths.
    pub fn load(path: &Path, seed: Option<u64>) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
        let mut cfg: RunConfig =
            toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        if let Some(s) = seed {
            cfg.seed = s;
        }
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [&mut cfg.paths.corpus, &mut cfg.paths.model_dir, &mut cfg.paths.report_dir]
            .into_iter()
            .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Defaults, or the file at `path` when given.
    pub fn load_or_default(path: Option<&Path>, seed: Option<u64>) -> Result<Self, CliError> {
        match path {
            Some(p) => Self::load(p, seed),
            None => {
                let mut cfg = Self::default();
                if let Some(s) = seed {
                    cfg.seed = s;
                }
                Ok(cfg)
            }
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.experiment_config()
            .validate()
            .map_err(|e| CliError::Config(e.to_string()))?;
        if let Some(c) = &self.paths.corpus {
            if !c.join("manifest.json").is_file() {
                return Err(CliError::Config(format!(
                    "paths.corpus: {} does not contain manifest.json",
                    c.display()
                )));
            }
        }
        Ok(())
    }

    pub fn experiment_config(&self) -> ExperimentConfig {
        ExperimentConfig {
            seed: self.seed,
            feature_mode: self.feature_mode,
            train_fraction: self.experiment.train_fraction,
            holdout_prevalence: self.experiment.holdout_prevalence,
            holdout_classes: self.experiment.holdout_classes.clone(),
            nd_recall_floor: self.calibration.recall_floor,
            ad_recall_floor: self.experiment.ad_recall_floor,
            ad_quantile: self.calibration.quantile,
            ad_train: self.train.ad.clone(),
            nd_train: self.train.novelty.clone(),
            graph: self.graph.clone(),
            histogram_bins: self.experiment.histogram_bins,
        }
    }

    /// Training block for `role` with its seed derived from the root seed.
    pub fn train_config(&self, role: Role) -> TrainConfig {
        let (base, stream) = match role {
            Role::Ad => (&self.train.ad, S_TRAIN_AD),
            Role::Novelty => (&self.train.novelty, S_TRAIN_ND),
        };
        TrainConfig {
            seed: derive_seed(self.seed, stream, 0),
            ..base.clone()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Role {
    Ad,
    Novelty,
}

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Role::Ad => "ad",
            Role::Novelty => "novelty",
        }
    }

    fn model_role(self) -> ModelRole {
        match self {
            Role::Ad => ModelRole::Anomaly,
            Role::Novelty => ModelRole::Novelty,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum ModeArg {
    FlowOnly,
    FlowAndGraph,
}

impl From<ModeArg> for FeatureMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::FlowOnly => FeatureMode::FlowOnly,
            ModeArg::FlowAndGraph => FeatureMode::FlowAndGraph,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RowFilter {
    Benign,
    Attack,
}

#[derive(Debug, Parser)]
#[command(name = "zdt", about = "Zero-day threat detection over network flows", disable_version_flag = true)]
pub struct Cli {
    /// Overrides the root seed of every stochastic step.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Prints the program and file format versions.
    #[arg(long)]
    pub version: bool,
    #[command(subcommand)]
    pub command: Option<Command>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generates a synthetic multi-network corpus.
    Gen {
        /// Corpus spec (TOML, or JSON by extension).
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Builds the flow graph of a flow file and writes its feature matrix.
    Featurize {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum)]
        mode: ModeArg,
        #[arg(long)]
        out: PathBuf,
        /// Also writes the per-node graph feature table.
        #[arg(long)]
        nodes: Option<PathBuf>,
        /// Keeps only rows with these labels; the graph still uses every flow.
        #[arg(long, value_enum)]
        only: Option<RowFilter>,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Trains an anomaly (benign-only) or novelty (attack-only) model.
    Train {
        #[arg(long, value_enum)]
        role: Role,
        /// Labeled feature matrix from `featurize`.
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Defaults to `<paths.model_dir>/<role>.model.json`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sets a model's loss threshold.
    Calibrate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        features: PathBuf,
        /// CSV with a `label` column aligned with the feature rows; defaults
        /// to the label column of the feature file.
        #[arg(long)]
        labels: Option<PathBuf>,
        #[arg(long, value_enum)]
        mode: Option<CalibrationMode>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Scores a flow file with both detectors and writes JSONL verdicts.
    Detect {
        #[arg(long)]
        ad: PathBuf,
        #[arg(long)]
        nd: PathBuf,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Prebuilt node feature table; without it the graph is built from the input.
        #[arg(long)]
        nodes: Option<PathBuf>,
        #[arg(long, default_value_t = 256)]
        batch_size: usize,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Runs one of the evaluation protocols on a generated corpus.
    Experiment {
        #[arg(long)]
        name: String,
        #[arg(long)]
        config: PathBuf,
        /// Defaults to `paths.report_dir`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

pub fn version_text() -> String {
    format!(
        "zdt {}\nmodel format {MODEL_FORMAT_VERSION}\nfeature schema {FEATURE_SCHEMA_VERSION}\n",
        env!("CARGO_PKG_VERSION")
    )
}

/// Runs a parsed command line, writing human-readable output to `out`.
pub fn run(cli: Cli, out: &mut dyn Write) -> Result<(), CliError> {
    let stdout_err = |e: std::io::Error| CliError::Io(format!("stdout: {e}"));
    if cli.version {
        return out.write_all(version_text().as_bytes()).map_err(stdout_err);
    }
    let Some(command) = cli.command else {
        return Err(CliError::Config("no subcommand given; see --help".into()));
    };
    match command {
        Command::Gen { spec, out: dir } => cmd_gen(&spec, &dir, cli.seed, out),
        Command::Featurize {
            input,
            mode,
            out: path,
            nodes,
            only,
            config,
        } => {
            let cfg = RunConfig::load_or_default(config.as_deref(), cli.seed)?;
            cmd_featurize(&input, mode.into(), &path, nodes.as_deref(), only, &cfg, out)
        }
        Command::Train {
            role,
            features,
            config,
            out: path,
        } => {
            let cfg = RunConfig::load_or_default(config.as_deref(), cli.seed)?;
            let path = match (path, &cfg.paths.model_dir) {
                (Some(p), _) => p,
                (None, Some(dir)) => dir.join(format!("{}.model.json", role.as_str())),
                (None, None) => return Err(CliError::Config("--out or paths.model_dir is required".into())),
            };
            cmd_train(role, &features, &cfg, &path, out)
        }
        Command::Calibrate {
            model,
            features,
            labels,
            mode,
            config,
            out: path,
        } => {
            let mut cfg = RunConfig::load_or_default(config.as_deref(), cli.seed)?;
            if let Some(m) = mode {
                cfg.calibration.mode = m;
            }
            cmd_calibrate(&model, &features, labels.as_deref(), &cfg.calibration, &path, out)
        }
        Command::Detect {
            ad,
            nd,
            input,
            out: path,
            nodes,
            batch_size,
            config,
        } => {
            let cfg = RunConfig::load_or_default(config.as_deref(), cli.seed)?;
            cmd_detect(&ad, &nd, &input, &path, nodes.as_deref(), batch_size, &cfg, out)
        }
        Command::Experiment { name, config, out: dir } => {
            let cfg = RunConfig::load(&config, cli.seed)?;
            let dir = dir
                .or_else(|| cfg.paths.report_dir.clone())
                .ok_or_else(|| CliError::Config("--out or paths.report_dir is required".into()))?;
            cmd_experiment(&name, &cfg, &dir, out)
        }
    }
    .and_then(|_| out.flush().map_err(stdout_err))
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    }
    File::create(path).map(BufWriter::new).map_err(|e| io_err(path, e))
}

fn say(out: &mut dyn Write, text: impl AsRef<str>) -> Result<(), CliError> {
    writeln!(out, "{}", text.as_ref()).map_err(|e| CliError::Io(format!("stdout: {e}")))
}

pub fn cmd_gen(spec_path: &Path, dir: &Path, seed: Option<u64>, out: &mut dyn Write) -> Result<(), CliError> {
    let text = fs::read_to_string(spec_path).map_err(|e| io_err(spec_path, e))?;
    let parse_err = |e: String| CliError::Config(format!("{}: {e}", spec_path.display()));
    let mut spec: CorpusSpec = match spec_path.extension().and_then(|e| e.to_str()) {
        Some("json") => serde_json::from_str(&text).map_err(|e| parse_err(e.to_string()))?,
        _ => toml::from_str(&text).map_err(|e| parse_err(e.to_string()))?,
    };
    if let Some(s) = seed {
        spec.seed = s;
    }
    let corpus = generate_corpus(&spec)?;
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    for ds in &corpus.networks {
        let path = dir.join(format!("{}.csv", ds.network_id));
        ds.save(&path, FlowFormat::Csv)?;
    }
    let manifest = serde_json::to_string_pretty(&corpus.manifest).expect("manifest serializes") + "\n";
    let mpath = dir.join("manifest.json");
    fs::write(&mpath, &manifest).map_err(|e| io_err(&mpath, e))?;
    say(out, manifest.trim_end())
}

/// Loads every network listed in a corpus manifest.
pub fn load_corpus(dir: &Path) -> Result<(Manifest, Vec<FlowDataset>), CliError> {
    let mpath = dir.join("manifest.json");
    let text = fs::read_to_string(&mpath).map_err(|e| io_err(&mpath, e))?;
    let manifest: Manifest =
        serde_json::from_str(&text).map_err(|e| CliError::Schema(format!("{}: {e}", mpath.display())))?;
    let mut networks = Vec::new();
    for n in &manifest.networks {
        let path = dir.join(format!("{}.csv", n.network_id));
        networks.push(load_dataset(&path, FlowFormat::Csv, &n.network_id, true)?.dataset);
    }
    Ok((manifest, networks))
}

fn load_flows(path: &Path) -> Result<FlowDataset, CliError> {
    let id = path.file_stem().and_then(|s| s.to_str()).unwrap_or("input");
    let report = load_dataset(path, FlowFormat::from_path(path), id, true)?;
    if report.dataset.is_empty() {
        return Err(CliError::Schema(format!("{}: no flow records", path.display())));
    }
    Ok(report.dataset)
}

pub fn cmd_featurize(
    input: &Path,
    mode: FeatureMode,
    path: &Path,
    nodes: Option<&Path>,
    only: Option<RowFilter>,
    cfg: &RunConfig,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let ds = load_flows(input)?;
    let nft = compute_node_features(&NetworkGraph::from_dataset(&ds), &cfg.graph);
    let ds = match only {
        Some(RowFilter::Benign) => ds.filter_by_label(AttackLabel::is_benign),
        Some(RowFilter::Attack) => ds.filter_by_label(AttackLabel::is_attack),
        None => ds,
    };
    let m = featurize(&ds, &nft, mode)?;
    let labels = ds.labels();
    m.write_csv(create(path)?, Some(&labels))?;
    if let Some(np) = nodes {
        nft.write_csv(create(np)?).map_err(|e| io_err(np, e))?;
    }
    for w in &nft.warnings {
        say(out, format!("warning: {w} reached its iteration cap"))?;
    }
    say(
        out,
        format!("{} rows x {} columns ({}) -> {}", m.rows(), m.cols(), mode.as_str(), path.display()),
    )
}

fn load_model(path: &Path) -> Result<AEModel, CliError> {
    AEModel::load(path).map_err(|e| match CliError::from(e) {
        CliError::Io(m) => CliError::Io(format!("{}: {m}", path.display())),
        CliError::Schema(m) => CliError::Schema(format!("{}: {m}", path.display())),
        other => other,
    })
}

fn read_features(path: &Path) -> Result<(FeatureMatrix, Option<Vec<AttackLabel>>), CliError> {
    let f = File::open(path).map_err(|e| io_err(path, e))?;
    let (m, labels) = FeatureMatrix::read_csv(f)?;
    if m.rows() == 0 {
        return Err(CliError::Schema(format!("{}: no rows", path.display())));
    }
    Ok((m, labels))
}

pub fn cmd_train(
    role: Role,
    features: &Path,
    cfg: &RunConfig,
    path: &Path,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let (m, labels) = read_features(features)?;
    let labels = labels.ok_or_else(|| {
        CliError::Schema(format!(
            "{}: a label column is required to check the training rows",
            features.display()
        ))
    })?;
    let tc = cfg.train_config(role);
    let (model, outcome) = train_detector_model(&m, &labels, role.model_role(), &tc)?;
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    }
    model.save(path)?;
    let log_path = log_path(path);
    let mut w = csv::Writer::from_writer(create(&log_path)?);
    let log = |e: csv::Error| io_err(&log_path, e);
    w.write_record(["epoch", "train_loss", "val_loss"]).map_err(log)?;
    for e in &outcome.history {
        w.write_record([e.epoch.to_string(), e.train_loss.to_string(), e.val_loss.to_string()])
            .map_err(log)?;
    }
    w.flush().map_err(|e| io_err(&log_path, e))?;
    say(
        out,
        format!(
            "{} rows, {} epochs (best {}), final train loss {:.6e}, best validation loss {:.6e} -> {}",
            m.rows(),
            outcome.history.len(),
            outcome.best_epoch,
            outcome.final_train_loss(),
            outcome.best_val_loss(),
            path.display()
        ),
    )
}

/// Training log written next to a model file.
pub fn log_path(model: &Path) -> PathBuf {
    let mut name = model.file_name().unwrap_or_default().to_os_string();
    name.push(".log.csv");
    model.with_file_name(name)
}

fn read_label_column(path: &Path) -> Result<Vec<AttackLabel>, CliError> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| io_err(path, e))?;
    let col = rdr
        .headers()
        .map_err(|e| CliError::Schema(format!("{}: {e}", path.display())))?
        .iter()
        .position(|h| h == "label")
        .ok_or_else(|| CliError::Schema(format!("{}: no label column", path.display())))?;
    let mut labels = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| CliError::Schema(format!("{}: {e}", path.display())))?;
        let label = rec.get(col).unwrap_or("").parse().expect("label parsing is infallible");
        labels.push(label);
    }
    Ok(labels)
}

pub fn cmd_calibrate(
    model_path: &Path,
    features: &Path,
    labels_path: Option<&Path>,
    cal: &CalibrationConfig,
    path: &Path,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let mut model = load_model(model_path)?;
    let (m, own_labels) = read_features(features)?;
    let labels = match labels_path {
        Some(p) => Some(read_label_column(p)?),
        None => own_labels,
    };
    if let Some(l) = &labels {
        if l.len() != m.rows() {
            return Err(CliError::Schema(format!(
                "{} labels for {} feature rows",
                l.len(),
                m.rows()
            )));
        }
    }
    let losses = model.score_raw(&m)?;
    let known = model.meta.known_classes.clone();
    let is_known = |l: &AttackLabel| l.class().is_some_and(|c| known.iter().any(|k| k == c));
    let threshold = match cal.mode {
        CalibrationMode::Quantile => {
            // losses of the rows this model is meant to reconstruct
            let keep: Vec<f64> = match &labels {
                Some(ls) => losses
                    .iter()
                    .zip(ls)
                    .filter(|(_, l)| match model.meta.role {
                        ModelRole::Anomaly => l.is_benign(),
                        ModelRole::Novelty => is_known(l),
                        ModelRole::Generic => true,
                    })
                    .map(|(&x, _)| x)
                    .collect(),
                None => losses.clone(),
            };
            let t = calibrate_threshold_unsupervised(&keep, cal.quantile)?;
            say(out, format!("quantile {} of {} losses: threshold {t:.6e}", cal.quantile, keep.len()))?;
            t
        }
        CalibrationMode::Supervised => {
            let ls = labels.ok_or_else(|| {
                CliError::Config("supervised calibration needs labels (--labels or a label column)".into())
            })?;
            let (scores, truth): (Vec<f64>, Vec<bool>) = match model.meta.role {
                ModelRole::Novelty => losses
                    .iter()
                    .zip(&ls)
                    .filter(|(_, l)| l.is_attack())
                    .map(|(&x, l)| (x, !is_known(l)))
                    .unzip(),
                _ => losses.iter().zip(&ls).map(|(&x, l)| (x, l.is_attack())).unzip(),
            };
            let c = calibrate_threshold_supervised(&scores, &truth, cal.recall_floor)?;
            say(
                out,
                format!(
                    "threshold {:.6e}: precision {:.4}, recall {:.4}{}",
                    c.threshold,
                    c.precision,
                    c.recall,
                    if c.feasible { "" } else { " (recall floor not reachable)" }
                ),
            )?;
            c.threshold
        }
    };
    model.meta.threshold = Some(threshold);
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    }
    model.save(path)?;
    Ok(())
}

#[allow(clippy::too_many_arguments)]
pub fn cmd_detect(
    ad_path: &Path,
    nd_path: &Path,
    input: &Path,
    path: &Path,
    nodes: Option<&Path>,
    batch_size: usize,
    cfg: &RunConfig,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let ad = AnomalyDetector::from_model(load_model(ad_path)?)?;
    let nd = NoveltyDetector::from_model(load_model(nd_path)?)?;
    let mode = model_feature_mode(&ad.model)
        .ok_or_else(|| CliError::Schema("anomaly model does not use a known feature layout".into()))?;
    let mut writer = VerdictWriter::new(create(path)?);
    let werr = |e: std::io::Error| io_err(path, e);
    let summary = match nodes {
        Some(np) => {
            let f = File::open(np).map_err(|e| io_err(np, e))?;
            let nft = NodeFeatureTable::read_csv(f).map_err(|e| CliError::Schema(format!("{}: {e}", np.display())))?;
            let reader = FlowReader::open(input, FlowFormat::from_path(input))?;
            for item in batch_detect_stream(&ad, &nd, reader, &nft, batch_size)? {
                writer
                    .write(item.index, item.outcome.as_ref().map_err(String::as_str), item.unknown_node)
                    .map_err(werr)?;
            }
            writer.finish().map_err(werr)?
        }
        None => {
            let ds = load_flows(input)?;
            let nft = if mode == FeatureMode::FlowAndGraph {
                compute_node_features(&NetworkGraph::from_dataset(&ds), &cfg.graph)
            } else {
                NodeFeatureTable::default()
            };
            let records = ds.records.into_iter().map(Ok);
            for item in batch_detect_stream(&ad, &nd, records, &nft, batch_size)? {
                writer
                    .write(item.index, item.outcome.as_ref().map_err(String::as_str), item.unknown_node)
                    .map_err(werr)?;
            }
            writer.finish().map_err(werr)?
        }
    };
    say(out, serde_json::to_string(&summary).expect("summary serializes"))
}

pub fn cmd_experiment(name: &str, cfg: &RunConfig, dir: &Path, out: &mut dyn Write) -> Result<(), CliError> {
    if !EXPERIMENTS.contains(&name) {
        return Err(CliError::Config(format!(
            "unknown experiment {name:?}; expected one of {}",
            EXPERIMENTS.join(", ")
        )));
    }
    let corpus_dir = cfg
        .paths
        .corpus
        .as_deref()
        .ok_or_else(|| CliError::Config("paths.corpus must name a generated corpus".into()))?;
    let (_, networks) = load_corpus(corpus_dir)?;
    let ecfg = cfg.experiment_config();
    let prepared = prepare_corpus(&networks, &ecfg)?;
    let mut report = run_experiment(name, &prepared, &ecfg)?;
    report.config = serde_json::json!({
        "run": cfg,
        "experiment": report.config,
    });
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let json_path = dir.join(format!("{name}.json"));
    fs::write(&json_path, report.to_json()).map_err(|e| io_err(&json_path, e))?;
    let csv_path = dir.join(format!("{name}.csv"));
    report.write_csv(create(&csv_path)?).map_err(|e| io_err(&csv_path, e))?;
    if !report.histograms.is_empty() {
        let h_path = dir.join(format!("{name}_histograms.csv"));
        report
            .write_histograms_csv(create(&h_path)?)
            .map_err(|e| io_err(&h_path, e))?;
    }
    say(out, report.render_table().trim_end())
}

/// Entry point for the binary: parses `std::env::args` and returns the exit code.
pub fn main_exit_code() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    match run(cli, &mut lock) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
