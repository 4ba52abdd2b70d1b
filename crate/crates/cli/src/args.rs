use std::path::PathBuf;

use clap::{ArgAction, Args, Parser, Subcommand};
use dshn::model::{Aggregation, SheafActivation};
use dshn::sheaf::MapShape;

#[derive(Debug, Parser)]
#[command(name = "dshn", version, about = "Directed sheaf hypergraph Laplacians and diffusion networks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate the class-block synthetic benchmark.
    GenSynthetic(GenArgs),
    /// Turn a directed graph (arc list) into a directed hypergraph.
    TransformGraph(TransformArgs),
    /// Assemble a sheaf Laplacian and write it as a dense matrix.
    BuildLaplacian(BuildArgs),
    /// Check spectral properties on random instances or on a matrix file.
    VerifySpectral(VerifyArgs),
    /// Compare against classical Laplacians and the linear-Laplacian counterexample.
    TheoremCheck(TheoremArgs),
    /// Train a DSHN / DSHNLight model.
    Train(TrainArgs),
    /// Train once per charge value and tabulate test accuracy.
    QSweep(SweepArgs),
    /// Re-run a recorded manifest and compare every emitted number.
    Replay(ReplayArgs),
}

/// Flags shared by every run.
#[derive(Debug, Args)]
pub struct RunArgs {
    /// key=value file providing defaults for any flag of this subcommand.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Where to write the run manifest.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long, default_value_t = 500)]
    pub n: usize,
    #[arg(long, default_value_t = 5)]
    pub classes: usize,
    #[arg(long, default_value_t = 3)]
    pub hmin: usize,
    #[arg(long, default_value_t = 10)]
    pub hmax: usize,
    /// Undirected hyperedges per class.
    #[arg(long, default_value_t = 30)]
    pub intra: usize,
    /// Directed hyperedges per ordered class pair.
    #[arg(long, default_value_t = 30)]
    pub inter: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output prefix; writes .hg, .features, .labels and .splits.
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Debug, Args)]
pub struct TransformArgs {
    /// Arc list file.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Accepted for uniformity; the transform draws no randomness.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Debug, Args)]
pub struct BuildArgs {
    /// Hypergraph file.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value_t = 0.0)]
    pub q: f64,
    #[arg(long, default_value_t = 1)]
    pub stalk_dim: usize,
    #[arg(long, default_value_t = MapShape::Trivial)]
    pub sheaf: MapShape,
    /// Seed for random diagonal or full maps.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, action = ArgAction::Set, num_args = 0..=1, require_equals = true,
          default_value_t = false, default_missing_value = "true")]
    pub normalized: bool,
    /// Output file; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, default_value_t = 500)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Check this dense matrix file instead of random instances.
    #[arg(long)]
    pub matrix: Option<PathBuf>,
    /// With --matrix, also require the largest eigenvalue to be at most 1.
    #[arg(long, action = ArgAction::Set, num_args = 0..=1, require_equals = true,
          default_value_t = false, default_missing_value = "true")]
    pub normalized: bool,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Debug, Args)]
pub struct TheoremArgs {
    #[arg(long, default_value_t = 50)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[command(flatten)]
    pub run: RunArgs,
}

/// Architecture and optimizer flags shared by `train` and `q-sweep`.
#[derive(Debug, Clone, Args)]
pub struct ModelFlags {
    /// Dataset prefix as written by gen-synthetic.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, default_value_t = 2)]
    pub layers: usize,
    #[arg(long, default_value_t = 3)]
    pub stalk_dim: usize,
    #[arg(long, default_value_t = 8)]
    pub hidden: usize,
    #[arg(long, default_value_t = MapShape::Diagonal)]
    pub sheaf: MapShape,
    #[arg(long, default_value_t = SheafActivation::Sigmoid)]
    pub sheaf_activation: SheafActivation,
    /// DSHNLight: frozen map predictor, Laplacian outside the backward pass.
    #[arg(long, action = ArgAction::Set, num_args = 0..=1, require_equals = true,
          default_value_t = false, default_missing_value = "true")]
    pub light: bool,
    #[arg(long, action = ArgAction::Set, num_args = 0..=1, require_equals = true,
          default_value_t = true, default_missing_value = "true")]
    pub residual: bool,
    /// Predict new maps at every layer.
    #[arg(long, action = ArgAction::Set, num_args = 0..=1, require_equals = true,
          default_value_t = false, default_missing_value = "true")]
    pub dynamic_sheaf: bool,
    /// Apply the per-stalk mixing W1.
    #[arg(long, action = ArgAction::Set, num_args = 0..=1, require_equals = true,
          default_value_t = true, default_missing_value = "true")]
    pub left_projection: bool,
    /// Fraction of restriction maps dropped during training.
    #[arg(long, default_value_t = 0.0)]
    pub dropout: f64,
    #[arg(long, default_value_t = Aggregation::Mean)]
    pub aggregation: Aggregation,
    #[arg(long, default_value_t = 1)]
    pub phi_depth: usize,
    #[arg(long, default_value_t = 32)]
    pub classifier_width: usize,
    #[arg(long, default_value_t = 0.01)]
    pub lr: f64,
    #[arg(long, default_value_t = 5e-4)]
    pub wd: f64,
    #[arg(long, default_value_t = 200)]
    pub epochs: usize,
    #[arg(long, default_value_t = 50)]
    pub patience: usize,
    /// Check λ_max of every layer's Laplacian every this many epochs (0 = off).
    #[arg(long, default_value_t = 0)]
    pub spectral_check_every: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub model: ModelFlags,
    #[arg(long, default_value_t = 0.1)]
    pub q: f64,
    /// Per-epoch metrics table.
    #[arg(long)]
    pub metrics_out: Option<PathBuf>,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub model: ModelFlags,
    /// Comma-separated charge values.
    #[arg(long, value_delimiter = ',', default_value = "0,0.05,0.1,0.15,0.2,0.25")]
    pub grid: Vec<f64>,
    /// Two-column table `q,test_acc`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Train the grid points on separate threads; results are identical.
    #[arg(long, action = ArgAction::Set, num_args = 0..=1, require_equals = true,
          default_value_t = false, default_missing_value = "true")]
    pub parallel: bool,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    /// Manifest of the run to reproduce.
    pub source: PathBuf,
    /// Manifest for the replayed run; defaults to `<source>.replay`.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}
