use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use hfpc_core::consistency::DiffAggregate;
use hfpc_core::metrics::ReportFormat;
use hfpc_core::{ConsistencyConfig, Fusion, LossMode};

#[derive(Debug, Parser)]
#[command(
    name = "hfpc",
    version,
    about = "Background reward head and product-consistency gate for inpainted product images"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train the reward head on a labelled manifest and write a parameter bundle.
    Train(TrainArgs),
    /// Score one (original, generated) embedding pair.
    Score(ScoreArgs),
    /// Check product consistency between two images from their masks.
    Consistency(ConsistencyArgs),
    /// Gate every generated image in a manifest and write evaluation.json.
    Evaluate(EvaluateArgs),
    /// Cluster originals by embedding and oversample small clusters.
    ClusterBalance(ClusterBalanceArgs),
    /// Seeded train / val / test split of a manifest.
    Split(SplitArgs),
    /// Compute metrics and curves from evaluation.json.
    Report(ReportArgs),
}

#[derive(Debug, Clone, Copy, Args)]
pub struct SeedArg {
    /// Seed for every stochastic step.
    #[arg(long, env = "HFPC_SEED", default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FusionArg {
    Attention,
    Concat,
}

impl From<FusionArg> for Fusion {
    fn from(f: FusionArg) -> Self {
        match f {
            FusionArg::Attention => Fusion::Attention,
            FusionArg::Concat => Fusion::Concat,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LossArg {
    Full,
    RankOnly,
}

impl From<LossArg> for LossMode {
    fn from(l: LossArg) -> Self {
        match l {
            LossArg::Full => LossMode::Full,
            LossArg::RankOnly => LossMode::RankOnly,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AggregateArg {
    Max,
    Mean,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Json,
    Csv,
    Svg,
}

impl From<FormatArg> for ReportFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Json => ReportFormat::Json,
            FormatArg::Csv => ReportFormat::Csv,
            FormatArg::Svg => ReportFormat::Svg,
        }
    }
}

#[derive(Debug, Clone, Copy, Args)]
pub struct ConsistencyFlags {
    /// Maximum aggregated pixel difference for a consistent verdict.
    #[arg(long, default_value_t = ConsistencyConfig::default().delta_diff)]
    pub delta_diff: f64,
    /// Minimum IoU for two masks to be matched.
    #[arg(long, default_value_t = ConsistencyConfig::default().tau_match)]
    pub tau_match: f64,
    /// Weight of centroid distance in the match score.
    #[arg(long, default_value_t = ConsistencyConfig::default().lambda_dist)]
    pub lambda_dist: f64,
    /// Unmatched generated masks below this image-area fraction are ignored.
    #[arg(long, default_value_t = ConsistencyConfig::default().area_floor)]
    pub area_floor: f64,
    /// How per-pair differences combine before thresholding.
    #[arg(long, value_enum, default_value_t = AggregateArg::Max)]
    pub aggregate: AggregateArg,
}

impl ConsistencyFlags {
    pub fn config(&self) -> ConsistencyConfig {
        ConsistencyConfig {
            lambda_dist: self.lambda_dist,
            tau_match: self.tau_match,
            delta_diff: self.delta_diff,
            area_floor: self.area_floor,
            aggregate: match self.aggregate {
                AggregateArg::Max => DiffAggregate::Max,
                AggregateArg::Mean => DiffAggregate::Mean,
            },
        }
    }
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Held-out manifest for per-epoch validation loss and final accuracy.
    #[arg(long)]
    pub val_manifest: Option<PathBuf>,
    /// Bundle directory.
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub seed: SeedArg,
    #[arg(long, value_enum, default_value_t = FusionArg::Attention)]
    pub fusion: FusionArg,
    #[arg(long, value_enum, default_value_t = LossArg::Full)]
    pub loss: LossArg,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub hidden: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    /// Background pass threshold stored in the bundle.
    #[arg(long)]
    pub theta_bg: Option<f64>,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    /// Bundle directory.
    #[arg(long)]
    pub params: PathBuf,
    /// HFT1 embedding of the original image.
    #[arg(long)]
    pub original: PathBuf,
    /// HFT1 embedding of the generated image.
    #[arg(long)]
    pub generated: PathBuf,
    /// Overrides the bundle's pass threshold.
    #[arg(long)]
    pub theta_bg: Option<f64>,
}

#[derive(Debug, Args)]
pub struct ConsistencyArgs {
    #[arg(long)]
    pub original_image: PathBuf,
    #[arg(long)]
    pub generated_image: PathBuf,
    /// Product masks of the original (PGM), comma separated.
    #[arg(long, value_delimiter = ',', num_args = 0..)]
    pub original_masks: Vec<PathBuf>,
    /// Product masks of the generated image (PGM), comma separated.
    #[arg(long, value_delimiter = ',', num_args = 0..)]
    pub generated_masks: Vec<PathBuf>,
    #[command(flatten)]
    pub flags: ConsistencyFlags,
    /// Verdict file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Bundle directory.
    #[arg(long)]
    pub params: PathBuf,
    /// Output directory for evaluation.json.
    #[arg(long)]
    pub out: PathBuf,
    /// Overrides the bundle's pass threshold.
    #[arg(long)]
    pub theta_bg: Option<f64>,
    #[command(flatten)]
    pub flags: ConsistencyFlags,
    #[command(flatten)]
    pub seed: SeedArg,
}

#[derive(Debug, Args)]
pub struct ClusterBalanceArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Balanced manifest (JSONL).
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 25)]
    pub k: usize,
    #[command(flatten)]
    pub seed: SeedArg,
    /// Per-cluster target size; defaults to the largest cluster.
    #[arg(long)]
    pub target: Option<usize>,
    /// Upper bound on the per-cluster target.
    #[arg(long)]
    pub cap: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Directory receiving train.jsonl, val.jsonl and test.jsonl.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0.8)]
    pub train_fraction: f64,
    #[arg(long, default_value_t = 0.2)]
    pub val_fraction: f64,
    #[command(flatten)]
    pub seed: SeedArg,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// evaluation.json written by `evaluate`.
    #[arg(long)]
    pub results: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Extra outputs beside report.json, comma separated.
    #[arg(long, value_enum, value_delimiter = ',', default_value = "json")]
    pub format: Vec<FormatArg>,
}
