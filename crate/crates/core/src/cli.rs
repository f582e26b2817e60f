//! Command-line front end.
//!
//! Progress goes to stderr; results go to files (and, for `gradcheck`, a
//! single stdout line). Exit codes: 0 success, 2 config or usage, 3 I/O,
//! 4 training divergence, 5 failed check.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::autodiff::Fault;
use crate::graph::{load_pair, matrix_to_csv, GraphError, GraphPair, WeightedGraph};
use crate::metrics::{evaluate_all, report_csv, MetricError, MetricReport, Which};
use crate::model::{predict, Checkpoint, ModelConfig, ModelError, ModelParams};
use crate::subtree::{extract_all, EntropyStrategy, RootRanking, Subtree, SubtreeError};
use crate::synth::{write_dataset, Manifest, SynthConfig, SynthError};
use crate::train::{
    kfold_split, model_grad_check, thread_pool, train_with_validation, EpochRecord, Mode,
    TrainConfig, TrainError,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_IO: i32 = 3;
pub const EXIT_DIVERGED: i32 = 4;
pub const EXIT_CHECK: i32 = 5;

/// Gradient checks pass below this relative error.
pub const GRADCHECK_TOL: f64 = 1e-4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error(transparent)]
    Subtree(#[from] SubtreeError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error("{0}")]
    Check(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io { .. } => EXIT_IO,
            CliError::Graph(e) => graph_code(e),
            CliError::Model(ModelError::Graph(e)) => graph_code(e),
            CliError::Train(TrainError::NonFiniteGradient { .. }) => EXIT_DIVERGED,
            CliError::Train(TrainError::Graph(e)) => graph_code(e),
            CliError::Train(TrainError::Model(ModelError::Graph(e))) => graph_code(e),
            CliError::Synth(SynthError::Io { .. }) => EXIT_IO,
            CliError::Synth(SynthError::Graph(e)) => graph_code(e),
            CliError::Check(_) => EXIT_CHECK,
            _ => EXIT_CONFIG,
        }
    }
}

fn graph_code(e: &GraphError) -> i32 {
    match e {
        GraphError::Io { .. } => EXIT_IO,
        _ => EXIT_CONFIG,
    }
}

fn io(path: &Path, source: std::io::Error) -> CliError {
    CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| io(path, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).expect("serializable");
    text.push('\n');
    write_file(path, &text)
}

/// Creates `dir` if needed; its parent must already exist.
fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    if dir.is_dir() {
        return Ok(());
    }
    fs::create_dir(dir).map_err(|e| io(dir, e))
}

/// The JSON run configuration. Relative paths are resolved against the
/// directory holding the file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfigFile {
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub mode: Mode,
    pub data_root: PathBuf,
    pub out_dir: PathBuf,
    pub synth: SynthConfig,
}

impl Default for RunConfigFile {
    fn default() -> Self {
        Self {
            model: ModelConfig::default(),
            train: TrainConfig::default(),
            mode: Mode::SelfSupervised,
            data_root: PathBuf::from("data"),
            out_dir: PathBuf::from("runs"),
            synth: SynthConfig::default(),
        }
    }
}

impl RunConfigFile {
    pub fn parse(text: &str, base: &Path) -> Result<Self, CliError> {
        let mut cfg: RunConfigFile =
            serde_json::from_str(text).map_err(|e| CliError::Config(format!("config: {e}")))?;
        cfg.data_root = base.join(&cfg.data_root);
        cfg.out_dir = base.join(&cfg.out_dir);
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| io(path, e))?;
        let base = path.parent().unwrap_or(Path::new(""));
        Self::parse(&text, base).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    /// Defaults when no file is given.
    pub fn load_or_default(path: Option<&Path>) -> Result<Self, CliError> {
        match path {
            Some(p) => Self::load(p),
            None => Ok(Self::default()),
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.model.validate()?;
        self.train.validate()?;
        self.synth.validate()?;
        Ok(())
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "subtreegen",
    version,
    about = "Subtree-based weighted graph generation"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic dataset and its manifest.
    GenData(GenDataArgs),
    /// Train a model and write checkpoint, history and folds.
    Train(TrainArgs),
    /// Run a checkpoint on one graph.
    Predict(PredictArgs),
    /// Score a checkpoint on a dataset split.
    Evaluate(EvaluateArgs),
    /// Compare model gradients with finite differences.
    Gradcheck(GradcheckArgs),
    /// Dump root ranking and extracted subtrees as JSON.
    Subtrees(SubtreesArgs),
}

#[derive(Debug, Args)]
pub struct GenDataArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Dataset root; defaults to the config's data_root.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub n_graphs: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// self_supervised, supervised or overfit.
    #[arg(long)]
    pub mode: Option<String>,
    /// Dataset root; defaults to the config's data_root.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Output directory; defaults to the config's out_dir.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Fold used for validation (1..folds); fold 0 is always held out.
    #[arg(long, default_value_t = 1)]
    pub val_fold: usize,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub graph: PathBuf,
    /// Directory for fused.csv, weights.csv and logits.csv.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    /// test, val, train or all.
    #[arg(long, default_value = "test")]
    pub split: String,
    /// fused or raw.
    #[arg(long, default_value = "fused")]
    pub which: String,
    #[arg(long)]
    pub out: PathBuf,
    /// Decides the target: the source itself unless supervised.
    #[arg(long, default_value = "self_supervised")]
    pub mode: String,
    /// Folds file; defaults to folds.json beside the checkpoint, then to a
    /// fresh split seeded by the checkpoint.
    #[arg(long)]
    pub folds: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GradcheckArgs {
    /// Use the six-node configuration.
    #[arg(long)]
    pub tiny: bool,
    #[arg(long, default_value_t = 1e-6)]
    pub h: f64,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    #[arg(long, hide = true)]
    pub inject_fault: bool,
}

#[derive(Debug, Args)]
pub struct SubtreesArgs {
    #[arg(long)]
    pub graph: PathBuf,
    #[arg(long, default_value_t = 15)]
    pub m: usize,
    #[arg(long, default_value_t = 1)]
    pub k: usize,
    #[arg(long)]
    pub out: PathBuf,
}

/// Parses `args` (program name first) and runs the command.
pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match run(cli.command) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::GenData(a) => cmd_gen_data(a),
        Command::Train(a) => cmd_train(a),
        Command::Predict(a) => cmd_predict(a),
        Command::Evaluate(a) => cmd_evaluate(a),
        Command::Gradcheck(a) => cmd_gradcheck(a),
        Command::Subtrees(a) => cmd_subtrees(a),
    }
}

pub fn cmd_gen_data(args: GenDataArgs) -> Result<(), CliError> {
    let cfg = RunConfigFile::load_or_default(args.config.as_deref())?;
    let mut synth = cfg.synth;
    if let Some(n) = args.n_graphs {
        synth.n_graphs = n;
    }
    if let Some(s) = args.seed {
        synth.seed = s;
    }
    synth.validate()?;
    let root = args.out.unwrap_or(cfg.data_root);
    let manifest = write_dataset(&synth, &root)?;
    eprintln!(
        "wrote {} pairs ({} nodes, seed {}) to {}",
        manifest.ids.len(),
        synth.n,
        synth.seed,
        root.display()
    );
    Ok(())
}

/// Ids listed in `root/manifest.json`.
pub fn dataset_ids(root: &Path) -> Result<Vec<String>, CliError> {
    let path = root.join("manifest.json");
    match Manifest::load(&path) {
        Ok(m) => Ok(m.ids),
        Err(SynthError::Io { .. }) if !path.exists() => Err(io(
            &path,
            std::io::Error::new(std::io::ErrorKind::NotFound, "dataset manifest not found"),
        )),
        Err(e) => Err(e.into()),
    }
}

fn load_pairs(root: &Path, ids: &[String], mode: Mode) -> Result<Vec<GraphPair>, CliError> {
    ids.iter()
        .map(|id| Ok(mode.apply(&load_pair(root, id)?)))
        .collect()
}

/// Split bookkeeping written beside a trained checkpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FoldsFile {
    pub seed: u64,
    pub mode: Mode,
    /// Fold 0 is the held-out test set.
    pub folds: Vec<Vec<String>>,
    pub val_fold: usize,
    pub train: Vec<String>,
    pub val: Vec<String>,
}

impl FoldsFile {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| io(path, e))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }
}

pub fn cmd_train(args: TrainArgs) -> Result<(), CliError> {
    let mut cfg = RunConfigFile::load_or_default(args.config.as_deref())?;
    if let Some(m) = &args.mode {
        cfg.mode = m.parse().map_err(CliError::Config)?;
    }
    if let Some(s) = args.seed {
        cfg.train.seed = s;
    }
    if let Some(e) = args.epochs {
        cfg.train.epochs = e;
    }
    cfg.validate()?;
    let data_root = args.data.unwrap_or(cfg.data_root.clone());
    let out = args.out.unwrap_or(cfg.out_dir.clone());

    let ids = dataset_ids(&data_root)?;
    let folds_file = match cfg.mode {
        Mode::Overfit => {
            let first = ids
                .first()
                .cloned()
                .ok_or_else(|| CliError::Config("dataset is empty".into()))?;
            FoldsFile {
                seed: cfg.train.seed,
                mode: cfg.mode,
                folds: vec![vec![first.clone()]],
                val_fold: 0,
                train: vec![first.clone()],
                val: vec![first],
            }
        }
        Mode::SelfSupervised | Mode::Supervised => {
            let folds = kfold_split(&ids, cfg.train.folds, cfg.train.seed)?;
            if args.val_fold == 0 || args.val_fold >= cfg.train.folds {
                return Err(CliError::Config(format!(
                    "--val-fold must be in 1..{}",
                    cfg.train.folds
                )));
            }
            let (train, val) = folds.rotation(args.val_fold);
            FoldsFile {
                seed: cfg.train.seed,
                mode: cfg.mode,
                folds: folds.folds,
                val_fold: args.val_fold,
                train,
                val,
            }
        }
    };
    let train_pairs = load_pairs(&data_root, &folds_file.train, cfg.mode)?;
    let val_pairs = load_pairs(&data_root, &folds_file.val, cfg.mode)?;
    ensure_dir(&out)?;

    eprintln!(
        "training {:?} on {} pairs ({} val) for {} epochs",
        cfg.mode,
        train_pairs.len(),
        val_pairs.len(),
        cfg.train.epochs
    );
    let epochs = cfg.train.epochs;
    let mut progress = |r: &EpochRecord, _: &ModelParams| {
        if r.epoch == 1 || r.epoch == epochs || r.epoch.is_multiple_of(10) {
            eprintln!(
                "epoch {:>4}/{epochs}  loss {:.5}  bce {:.5}  mae {:.5}  val_mae {:.5}",
                r.epoch, r.total, r.structure, r.weight, r.val_mae
            );
        }
    };
    let (params, history) = train_with_validation(
        &train_pairs,
        &val_pairs,
        &cfg.train,
        &cfg.model,
        Some(&mut progress),
    )?;

    Checkpoint::new(&cfg.model, cfg.train.seed, &params).save(&out.join("checkpoint.json"))?;
    write_file(&out.join("history.csv"), &history.to_csv())?;
    write_json(&out.join("folds.json"), &folds_file)?;
    eprintln!(
        "wrote checkpoint.json, history.csv, folds.json to {}",
        out.display()
    );
    Ok(())
}

fn load_checkpoint(path: &Path) -> Result<(Checkpoint, ModelParams), CliError> {
    let ckpt = Checkpoint::load(path)?;
    let params = ckpt.params()?;
    Ok((ckpt, params))
}

pub fn cmd_predict(args: PredictArgs) -> Result<(), CliError> {
    let (ckpt, params) = load_checkpoint(&args.checkpoint)?;
    let g = WeightedGraph::load(&args.graph)?;
    let decoded = predict(&g, &params, &ckpt.config)?;
    ensure_dir(&args.out)?;
    let n = decoded.n();
    write_file(&args.out.join("fused.csv"), &decoded.fused.to_csv())?;
    write_file(
        &args.out.join("weights.csv"),
        &matrix_to_csv(n, n, decoded.weights.data()),
    )?;
    write_file(
        &args.out.join("logits.csv"),
        &matrix_to_csv(n, n, decoded.logits.data()),
    )?;
    eprintln!(
        "predicted {} edges; wrote fused.csv, weights.csv, logits.csv to {}",
        decoded.fused.edge_count(),
        args.out.display()
    );
    Ok(())
}

/// Ids of `split` given the folds and all dataset ids.
pub fn split_ids(split: &str, folds: &FoldsFile, all: &[String]) -> Result<Vec<String>, CliError> {
    match split {
        "test" => Ok(folds.folds[0].clone()),
        "val" => Ok(folds.val.clone()),
        "train" => Ok(folds.train.clone()),
        "all" => Ok(all.to_vec()),
        other => Err(CliError::Config(format!(
            "unknown split {other:?} (test|val|train|all)"
        ))),
    }
}

pub fn cmd_evaluate(args: EvaluateArgs) -> Result<(), CliError> {
    let which: Which = args.which.parse().map_err(CliError::Config)?;
    let mode: Mode = args.mode.parse().map_err(CliError::Config)?;
    let (ckpt, params) = load_checkpoint(&args.checkpoint)?;
    let ids = dataset_ids(&args.data)?;

    let beside = args
        .checkpoint
        .parent()
        .map(|p| p.join("folds.json"))
        .filter(|p| p.exists());
    let folds = match args.folds.or(beside) {
        Some(path) => FoldsFile::load(&path)?,
        None => {
            let folds = kfold_split(&ids, TrainConfig::default().folds, ckpt.seed)?;
            let (train, val) = folds.rotation(1);
            FoldsFile {
                seed: ckpt.seed,
                mode,
                folds: folds.folds,
                val_fold: 1,
                train,
                val,
            }
        }
    };
    let chosen = split_ids(&args.split, &folds, &ids)?;
    if chosen.is_empty() {
        return Err(CliError::Config(format!("split {:?} is empty", args.split)));
    }
    let pairs = load_pairs(&args.data, &chosen, mode)?;
    let config = ckpt.config.clone();
    let rows = thread_pool().install(|| {
        pairs
            .par_iter()
            .map(|p| -> Result<(String, MetricReport), CliError> {
                let decoded = predict(&p.source, &params, &config)?;
                Ok((p.id.clone(), evaluate_all(&decoded, &p.target, which)?))
            })
            .collect::<Result<Vec<_>, _>>()
    })?;
    write_file(&args.out, &report_csv(&rows))?;
    let mean_mae = rows.iter().map(|(_, r)| r.mae).sum::<f64>() / rows.len() as f64;
    eprintln!(
        "evaluated {} pairs ({} split, {which}); mean edge MAE {mean_mae:.4}; wrote {}",
        rows.len(),
        args.split,
        args.out.display()
    );
    Ok(())
}

pub fn cmd_gradcheck(args: GradcheckArgs) -> Result<(), CliError> {
    if !(args.h > 0.0 && args.h.is_finite()) {
        return Err(CliError::Config("--h must be positive".into()));
    }
    let model = if args.tiny {
        ModelConfig::tiny()
    } else {
        ModelConfig::default()
    };
    let fault = args.inject_fault.then_some(Fault::SigmoidGrad);
    let start = std::time::Instant::now();
    let report = model_grad_check(&model, &TrainConfig::default(), args.seed, args.h, fault)?;
    println!(
        "max_rel_err {:.3e} over {} parameters (worst in {}, {:.2?})",
        report.max_rel_err,
        report.param_count,
        report.worst_param,
        start.elapsed()
    );
    if report.max_rel_err < GRADCHECK_TOL {
        Ok(())
    } else {
        Err(CliError::Check(format!(
            "gradient check failed: {:.3e} >= {GRADCHECK_TOL:e}",
            report.max_rel_err
        )))
    }
}

/// JSON document written by `subtrees`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubtreeDump {
    pub ranking: RootRanking,
    pub subtrees: Vec<Subtree>,
}

pub fn cmd_subtrees(args: SubtreesArgs) -> Result<(), CliError> {
    let g = WeightedGraph::load(&args.graph)?;
    let subtrees = extract_all(&g, args.m, args.k)?;
    let dump = SubtreeDump {
        ranking: RootRanking::compute(&g, EntropyStrategy::EdgeWeight),
        subtrees,
    };
    write_json(&args.out, &dump)?;
    eprintln!(
        "wrote {} subtrees (k={}) to {}",
        dump.subtrees.len(),
        args.k,
        args.out.display()
    );
    Ok(())
}
