use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use mlbalance::net::{Activation, AdjacencyMode, HeadMode, InputMode, ReadoutMode, Task};
use mlbalance::resample::Method;
use serde::Serialize;

#[derive(Parser, Debug)]
#[command(
    name = "mlbalance",
    version,
    about = "Multilabel imbalance profiling, oversampling and hybrid graph/fingerprint models"
)]
pub struct Cli {
    /// Maximum worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Imbalance report (IRLbl, MeanIR, Card, SCUMBLE) and label-frequency profile.
    Metrics(MetricsArgs),
    /// Oversample minority instances by replication or MLSMOTE.
    Oversample(OversampleArgs),
    /// Chord-diagram documents and a per-label SCUMBLE comparison across snapshots.
    Cooccur(CooccurArgs),
    /// Train a graph, fingerprint or hybrid model.
    Train(TrainArgs),
    /// Evaluate a trained model.
    Eval(EvalArgs),
    /// Generate a synthetic skewed dataset.
    Synth(SynthArgs),
    /// Split a dataset into train and test parts.
    Split(SplitArgs),
}

#[derive(Args, Debug, Serialize)]
pub struct DataArgs {
    /// Dataset records (JSON lines).
    #[arg(long)]
    pub data: PathBuf,
    /// Label vocabulary; defaults to `<stem>.vocab.tsv` beside the data file.
    #[arg(long)]
    pub vocab: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
pub struct MetricsArgs {
    #[command(flatten)]
    pub input: DataArgs,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
pub struct OversampleArgs {
    #[command(flatten)]
    pub input: DataArgs,
    /// proposed | mlsmote
    #[arg(long, default_value = "proposed")]
    pub method: Method,
    /// Oversampling fraction of the original size.
    #[arg(long, default_value_t = 0.25)]
    pub p: f64,
    /// Copies per selected instance (proposed only).
    #[arg(long, default_value_t = 1)]
    pub r: usize,
    /// Neighbours per seed (mlsmote only).
    #[arg(long, default_value_t = 5)]
    pub k: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
pub struct CooccurArgs {
    /// Snapshot datasets; the first is the reference. Use `name=path` to name one.
    #[arg(long, required = true, num_args = 1..)]
    pub data: Vec<String>,
    /// Comma-separated label names.
    #[arg(long, conflicts_with = "random_labels")]
    pub labels: Option<String>,
    /// Draw this many labels at random instead of naming them.
    #[arg(long)]
    pub random_labels: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
pub struct TrainArgs {
    #[command(flatten)]
    pub input: DataArgs,
    /// multilabel | multiregression
    #[arg(long, default_value = "multilabel")]
    pub task: Task,
    /// graph | fingerprint | hybrid
    #[arg(long, default_value = "hybrid")]
    pub inputs: InputMode,
    #[arg(long, default_value_t = 400)]
    pub epochs: usize,
    #[arg(long, default_value_t = 0.1)]
    pub lr: f64,
    #[arg(long, default_value_t = 0.0)]
    pub momentum: f64,
    /// Mini-batch size; full batch when omitted.
    #[arg(long)]
    pub batch_size: Option<usize>,
    /// Comma-separated graph layer widths.
    #[arg(long, default_value = "64,64")]
    pub hidden: String,
    #[arg(long, default_value_t = 64)]
    pub fusion_dim: usize,
    /// relu | tanh | sigmoid | identity
    #[arg(long, default_value = "relu")]
    pub activation: Activation,
    /// max_plus_mean | max_plus_min | concat_mean_max
    #[arg(long, default_value = "max_plus_mean")]
    pub readout: ReadoutMode,
    /// sigmoid_multilabel | linear_regression | softmax; defaults to the task's head.
    #[arg(long)]
    pub head: Option<HeadMode>,
    /// literal | self_loops | normalized
    #[arg(long, default_value = "normalized")]
    pub adjacency: AdjacencyMode,
    /// Held-out dataset; the checkpoint keeps the epoch with the lowest loss on it.
    #[arg(long)]
    pub validation: Option<PathBuf>,
    /// Stop after this many epochs without validation improvement.
    #[arg(long, requires = "validation")]
    pub patience: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Checkpoint path; the loss curve and manifest are written beside it.
    #[arg(long)]
    pub model_out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
pub struct EvalArgs {
    #[command(flatten)]
    pub input: DataArgs,
    /// Checkpoint written by `train`.
    #[arg(long)]
    pub model: PathBuf,
    /// Report path; the manifest is written beside it.
    #[arg(long)]
    pub report: PathBuf,
    /// Score threshold for a positive label (inclusive).
    #[arg(long, default_value_t = 0.5)]
    pub threshold: f64,
    /// Regression only: write `target,prediction` pairs here.
    #[arg(long)]
    pub scatter: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 1000)]
    pub n_instances: usize,
    #[arg(long, default_value_t = 100)]
    pub n_labels: usize,
    #[arg(long, default_value_t = 1.1)]
    pub zipf_exponent: f64,
    #[arg(long, default_value_t = 1.5)]
    pub target_card: f64,
    #[arg(long, default_value_t = 1024)]
    pub fingerprint_width: usize,
    #[arg(long, default_value_t = 4)]
    pub signal_bits_per_label: usize,
    #[arg(long, default_value_t = 0.02)]
    pub noise_flip_prob: f64,
    /// Node-count range `min-max`, or `none` for fingerprint-only data.
    #[arg(long, default_value = "6-16")]
    pub graph_nodes: String,
    #[arg(long, default_value_t = 9)]
    pub node_feature_dim: usize,
    #[arg(long, default_value_t = 1.0)]
    pub graph_signal: f64,
    #[arg(long, default_value_t = 0)]
    pub regression_width: usize,
    #[arg(long, default_value_t = 0.0)]
    pub cooccurrence_boost: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Dataset path; the vocabulary and manifest are written beside it.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
pub struct SplitArgs {
    #[command(flatten)]
    pub input: DataArgs,
    #[arg(long, default_value_t = 0.2)]
    pub test_fraction: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output directory for `train.jsonl` and `test.jsonl`.
    #[arg(long)]
    pub out: PathBuf,
}
