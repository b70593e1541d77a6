use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use egonet_core::dhg::DEFAULT_OCCLUSION_COST;
use egonet_core::eval::Baseline;
use egonet_core::model::Variant;
use egonet_core::train::Preset;

#[derive(Debug, Parser)]
#[command(name = "egonet", version, about = "Action-object detection from first-person RGBD")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Disparity and depth from a rectified grayscale stereo pair.
    Depth(DepthArgs),
    /// DHG channel images for every frame of a dataset.
    Encode(EncodeArgs),
    /// Render a synthetic dataset.
    Synth(SynthArgs),
    /// Train one model on every frame of a dataset.
    Train(TrainArgs),
    /// Score a checkpoint or a baseline on a dataset.
    Eval(EvalArgs),
    /// Leave-one-out comparison of the four architecture variants.
    Ablate(AblateArgs),
    /// Merge eval outputs into one CSV and a PR plot.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct DepthArgs {
    /// Left image (PNG, converted to grayscale).
    pub left: PathBuf,
    /// Right image.
    pub right: PathBuf,
    /// Stereo calibration (JSON).
    pub calib: PathBuf,
    #[arg(long, default_value_t = 32)]
    pub max_disp: usize,
    #[arg(long, default_value_t = DEFAULT_OCCLUSION_COST)]
    pub occlusion: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EncodeArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    /// DHG bounds (TOML); defaults to the dataset's own.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Scene spec (JSON or TOML, or a previous run.json); the built-in
    /// four-scene spec when absent.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Seed of the built-in spec.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    /// Model and training settings (TOML with [model] and [train], or a
    /// previous run.json).
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub preset: Option<Preset>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub common: ExperimentArgs,
    #[arg(long, default_value = "full")]
    pub variant: Variant,
}

#[derive(Debug, Args)]
#[command(group = clap::ArgGroup::new("predictor").required(true).args(["checkpoint", "baseline"]))]
pub struct EvalArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    #[arg(long)]
    pub baseline: Option<Baseline>,
    /// Model config; defaults to config.toml beside the checkpoint.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value_t = 101)]
    pub thresholds: usize,
    /// Average precision and recall per image instead of pooling counts.
    #[arg(long)]
    pub per_image: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct AblateArgs {
    #[command(flatten)]
    pub common: ExperimentArgs,
    #[arg(long, default_value_t = 101)]
    pub thresholds: usize,
    /// Average precision and recall per image instead of pooling counts.
    #[arg(long)]
    pub per_image: bool,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Eval or ablate output directories.
    #[arg(required = true)]
    pub runs: Vec<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}
