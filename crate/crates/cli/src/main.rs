//! `gramtraj` command-line interface.

mod commands;
mod failure;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use failure::Failure;

#[derive(Parser, Debug)]
#[command(
    name = "gramtraj",
    version,
    about = "Landmark sequences as trajectories of Gram matrices"
)]
pub struct Cli {
    /// Worker threads for pairwise distances (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// Print machine-readable JSON on stdout.
    #[arg(long, global = true)]
    pub json: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// DTW distance between two sequences.
    Distance(PairArgs),
    /// Optimal warping path between two sequences.
    Align(PairArgs),
    /// Re-sample a sequence adaptively or to a fixed length.
    Resample(ResampleArgs),
    /// Write a synthetic dataset.
    Synth(SynthArgs),
    /// Train a classifier on a dataset directory.
    Train(TrainArgs),
    /// Classify sequences with a trained model.
    Predict(PredictArgs),
    /// Cross-validate on a dataset directory and write reports.
    Eval(EvalArgs),
}

#[derive(Args, Debug)]
pub struct InputArgs {
    /// Coordinates per landmark, needed for CSV row files.
    #[arg(long)]
    pub dim: Option<usize>,
}

#[derive(Args, Debug)]
pub struct PairArgs {
    pub first: PathBuf,
    pub second: PathBuf,
    /// Weight of the SPD term in the closeness.
    #[arg(long, default_value_t = 1.0)]
    pub k: f64,
    /// Write the frame-by-frame closeness matrix as CSV.
    #[arg(long, value_name = "PATH")]
    pub dump_costs: Option<PathBuf>,
    #[command(flatten)]
    pub input: InputArgs,
}

#[derive(Args, Debug)]
pub struct ResampleArgs {
    pub input: PathBuf,
    #[arg(short, long)]
    pub output: PathBuf,
    /// Exact output length.
    #[arg(long, conflicts_with_all = ["zeta1", "zeta2"], required_unless_present = "zeta2")]
    pub target_len: Option<usize>,
    /// Drop points closer than this to the last kept point.
    #[arg(long, requires = "zeta2")]
    pub zeta1: Option<f64>,
    /// Split gaps wider than this.
    #[arg(long)]
    pub zeta2: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub k: f64,
    #[command(flatten)]
    pub io: InputArgs,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum SynthKind {
    /// Generic landmark motions (rotation, stretch, ...).
    Motions,
    /// 20-joint skeletons whose classes differ in the arms only.
    Skeleton,
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    #[arg(short, long)]
    pub output: PathBuf,
    #[arg(long, value_enum, default_value_t = SynthKind::Motions)]
    pub kind: SynthKind,
    /// Motion classes, comma separated.
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "rotation,stretch,oscillation,composite"
    )]
    pub classes: Vec<String>,
    #[arg(long, default_value_t = 20)]
    pub per_class: usize,
    #[arg(long, default_value_t = 20)]
    pub min_len: usize,
    #[arg(long, default_value_t = 40)]
    pub max_len: usize,
    #[arg(long, default_value_t = 0.02)]
    pub noise: f64,
    #[arg(long, default_value_t = 5)]
    pub subjects: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
pub enum ClassifierArg {
    Ppfsvm,
    Knn,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
pub enum ProtocolArg {
    Loocv,
    Loso,
    Kfold,
    HalfHalf,
}

/// Pipeline settings. Flags override the config file, which overrides the
/// built-in defaults.
#[derive(Args, Debug)]
pub struct PipelineArgs {
    /// Run configuration (TOML).
    #[arg(long, env = "GRAMTRAJ_CONFIG")]
    pub config: Option<PathBuf>,
    /// Body-part schema: a shipped layout name or a schema file.
    #[arg(long)]
    pub parts: Option<String>,
    /// Fixed closeness weight instead of a grid search.
    #[arg(long, conflicts_with = "k_grid")]
    pub k: Option<f64>,
    /// Candidate closeness weights, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub k_grid: Option<Vec<f64>>,
    #[arg(long)]
    pub classifier: Option<ClassifierArg>,
    /// SVM regularization.
    #[arg(long = "c", visible_alias = "svm-c")]
    pub c: Option<f64>,
    /// Neighbours for k-NN.
    #[arg(long)]
    pub neighbors: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, conflicts_with = "target_len", requires = "zeta2")]
    pub zeta1: Option<f64>,
    #[arg(long, conflicts_with = "target_len", requires = "zeta1")]
    pub zeta2: Option<f64>,
    #[arg(long)]
    pub target_len: Option<usize>,
    /// Closeness weight used while re-sampling.
    #[arg(long)]
    pub resample_k: Option<f64>,
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    /// Directory of sequence files.
    pub dataset: PathBuf,
    #[arg(short, long)]
    pub output: PathBuf,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
}

#[derive(Args, Debug)]
pub struct PredictArgs {
    pub model: PathBuf,
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    #[command(flatten)]
    pub io: InputArgs,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    /// Directory of sequence files.
    pub dataset: PathBuf,
    /// Directory for the reports and the trained model.
    #[arg(short, long)]
    pub output: PathBuf,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
    #[arg(long)]
    pub protocol: Option<ProtocolArg>,
    #[arg(long)]
    pub folds: Option<usize>,
    #[arg(long)]
    pub inner_folds: Option<usize>,
    /// JSON list of training subjects for a fixed half-half split.
    #[arg(long)]
    pub split_file: Option<PathBuf>,
    /// Skip training the final model on the whole dataset.
    #[arg(long)]
    pub no_model: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.threads == Some(0) {
        eprintln!("error: --threads must be at least 1");
        return ExitCode::from(failure::EXIT_INPUT);
    }
    let threads = cli.threads;
    match gramtraj::par::with_threads(threads, || commands::run(cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure { code, message }) => {
            eprintln!("error: {message}");
            ExitCode::from(code)
        }
    }
}
