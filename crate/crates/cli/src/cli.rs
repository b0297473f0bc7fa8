use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "geoground", version, about = "Geometric hallucination detection on embedding spheres")]
pub struct Cli {
    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute a global grounding direction from grounded records.
    Calibrate(CalibrateArgs),
    /// Score every record of a dataset.
    Score(ScoreArgs),
    /// Summarize a scores file: AUROC, Cohen's d and a bootstrap CI.
    Eval(EvalArgs),
    /// Cross-domain transfer matrix.
    Transfer(TransferArgs),
    /// Generate a synthetic dataset with planted geometry.
    Synth(SynthArgs),
    /// Fill in missing embeddings from an embedding service.
    Embed(EmbedArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct CalibrateArgs {
    /// JSONL dataset; its grounded records form the reference set.
    #[arg(long)]
    pub input: PathBuf,
    /// Output path for the direction JSON.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value = "calibration")]
    pub tag: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScoreMode {
    Sgi,
    Gamma,
    GammaLocal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Neighborhood {
    /// One reference index over every grounded reference record.
    Pooled,
    /// A separate index per domain; records use their own domain's index.
    Domain,
}

#[derive(Debug, Args, Serialize)]
pub struct ScoreArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum)]
    pub mode: ScoreMode,
    /// Direction JSON from `calibrate` (gamma mode).
    #[arg(long)]
    pub mu: Option<PathBuf>,
    /// JSONL reference set (gamma-local, or gamma with --loocv).
    #[arg(long)]
    pub reference: Option<PathBuf>,
    #[arg(long, default_value_t = geoground_core::DEFAULT_K)]
    pub k: usize,
    #[arg(long, value_enum, default_value_t = Neighborhood::Pooled)]
    pub neighborhood: Neighborhood,
    /// Exclude each record's own id from the reference set.
    #[arg(long)]
    pub loocv: bool,
    /// Output scores; `.json` for JSON, anything else for CSV.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct EvalArgs {
    /// Scores file written by `score` (CSV, or JSON by extension).
    #[arg(long)]
    pub scores: PathBuf,
    /// Bootstrap resamples.
    #[arg(long, default_value_t = geoground_core::eval::DEFAULT_RESAMPLES)]
    pub bootstrap: usize,
    #[arg(long, default_value_t = geoground_core::eval::DEFAULT_CONFIDENCE)]
    pub confidence: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Scorer label in the summary; defaults to the scores file's mode column.
    #[arg(long)]
    pub scorer: Option<String>,
    /// Summary output; `.csv` for CSV, anything else for JSON.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct TransferArgs {
    /// Domain dataset as NAME=PATH or PATH (named after the file stem). Repeatable.
    #[arg(long = "domain", value_name = "NAME=PATH")]
    pub domains: Vec<String>,
    /// Combined dataset split by its `domain` field.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Grounded fraction used for calibration on the diagonal.
    #[arg(long, default_value_t = 0.8)]
    pub fraction: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ScenarioArg {
    Type1,
    Type2,
    Type3,
    Multidomain,
}

#[derive(Debug, Args, Serialize)]
pub struct SynthArgs {
    /// ScenarioConfig JSON; flags given alongside override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub scenario: Option<ScenarioArg>,
    #[arg(long)]
    pub dim: Option<usize>,
    /// Records per domain, split evenly between the labels.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub n_grounded: Option<usize>,
    #[arg(long)]
    pub n_halluc: Option<usize>,
    /// Per-dimension vMF concentration.
    #[arg(long)]
    pub kappa: Option<f64>,
    /// Radians; theta(q, c) for type1, the response step angle otherwise.
    #[arg(long)]
    pub separation: Option<f64>,
    #[arg(long)]
    pub n_domains: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
    /// Write each multidomain domain to `<stem>.<domain>.jsonl` instead of one file.
    #[arg(long)]
    pub split_domains: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct EmbedArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// EmbeddingClientConfig JSON; flags given alongside override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub base_url: Option<String>,
    #[arg(long)]
    pub model: Option<String>,
    /// Records per request.
    #[arg(long)]
    pub batch_size: Option<usize>,
    /// Request timeout in seconds.
    #[arg(long)]
    pub timeout: Option<f64>,
    /// Environment variable holding the bearer token.
    #[arg(long)]
    pub auth_env: Option<String>,
    #[arg(long)]
    pub retries: Option<u32>,
}
