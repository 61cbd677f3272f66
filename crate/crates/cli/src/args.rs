use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Cardiac strain phantoms, speckle tracking and evaluation.
#[derive(Debug, Parser)]
#[command(name = "myostrain", version)]
pub struct Cli {
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,

    /// Default root for output directories.
    #[arg(long, global = true, env = "MYOSTRAIN_OUT", hide_env_values = true)]
    pub out_root: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Synthesize a phantom dataset (frames, scatterers, ground truth).
    Phantom(PhantomArgs),
    /// Check a dataset and any derived artifacts against their manifests.
    Verify(VerifyArgs),
    /// Estimate motion for a dataset.
    Track(TrackArgs),
    /// Compute segmental and global strain from a motion estimate.
    Strain(StrainArgs),
    /// Compare a motion estimate and its strain against ground truth.
    Eval(EvalArgs),
    /// Run the decorrelation sweep over coherence ratios and seeds.
    Sweep(SweepArgs),
}

#[derive(Debug, Args)]
pub struct PhantomArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory; defaults to `<out-root>/phantom-<seed>`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Render with a fixed summation order.
    #[arg(long)]
    pub deterministic: bool,
    /// Write one dataset per coherence ratio, e.g. `0.9,0.7,0.6,0.5`.
    #[arg(long)]
    pub ratios: Option<String>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    pub dataset: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TrackMode {
    BaselineFlow,
    BaselineTrack,
    External,
}

impl TrackMode {
    pub fn name(self) -> &'static str {
        match self {
            TrackMode::BaselineFlow => "baseline-flow",
            TrackMode::BaselineTrack => "baseline-track",
            TrackMode::External => "external",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ExternalFormat {
    Flow,
    Trajectory,
}

#[derive(Debug, Args)]
pub struct TrackArgs {
    pub dataset: PathBuf,
    #[arg(long, value_enum)]
    pub mode: TrackMode,
    /// Tracker settings; defaults to the dataset's configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// External motion file (required with `--mode external`).
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Expected content of the external file.
    #[arg(long, value_enum)]
    pub format: Option<ExternalFormat>,
}

#[derive(Debug, Args)]
pub struct StrainArgs {
    pub dataset: PathBuf,
    /// Motion estimate: baseline-flow, baseline-track, external or ground-truth.
    #[arg(long, default_value = "baseline-track")]
    pub motion: String,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    pub dataset: PathBuf,
    #[arg(long, default_value = "baseline-track")]
    pub motion: String,
    /// Segment levels for strain agreement, e.g. `basal,mid`.
    #[arg(long)]
    pub levels: Option<String>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// First seed; the sweep uses `seed..seed + seeds`.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub seeds: Option<usize>,
    #[arg(long)]
    pub ratios: Option<String>,
    #[arg(long)]
    pub levels: Option<String>,
    #[arg(long, value_parser = ["flow", "trajectory"])]
    pub mode: Option<String>,
    #[arg(long)]
    pub deterministic: bool,
    /// Output directory; defaults to `<out-root>/sweep-<seed>`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}
