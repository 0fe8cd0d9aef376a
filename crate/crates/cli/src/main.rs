mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use eegattn::ErrorClass;

/// EEG decoding with a convolutional front end and a self-attention encoder.
#[derive(Debug, Parser)]
#[command(name = "eegattn", version)]
pub struct Cli {
    /// JSON run configuration; flags override its fields.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Seed for the command's random streams (overrides the configuration).
    #[arg(long, global = true, env = "EEGATTN_SEED")]
    pub seed: Option<u64>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic trial set (or, with --raw, a continuous recording).
    Synth(SynthArgs),
    /// Filter, epoch and channel-select a continuous recording.
    Preprocess(PreprocessArgs),
    /// Cross-validate the model on one or more trial sets.
    Train(TrainArgs),
    /// Evaluate saved weights on a trial set.
    Eval(EvalArgs),
    /// Compare two training results with Kruskal-Wallis and a paired permutation test.
    Stats(StatsArgs),
    /// Finite-difference check of every differentiable op and the full model.
    Gradcheck(GradcheckArgs),
    /// Print the parameter count and layer shapes of the configured model.
    Describe(DescribeArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub out: PathBuf,
    /// Continuous 64-channel recording with event markers instead of trials.
    #[arg(long)]
    pub raw: bool,
    #[arg(long)]
    pub classes: Option<usize>,
    #[arg(long)]
    pub trials_per_class: Option<usize>,
    #[arg(long)]
    pub channels: Option<usize>,
    #[arg(long)]
    pub samples: Option<usize>,
    /// Sampling rate in Hz.
    #[arg(long)]
    pub fs: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub snr: Option<f64>,
    /// Raw mode: number of event markers.
    #[arg(long)]
    pub markers: Option<usize>,
    /// Raw mode: recording length in seconds.
    #[arg(long)]
    pub duration: Option<f64>,
    /// Raw mode: onset of the first marker in seconds.
    #[arg(long)]
    pub first_marker: Option<f64>,
}

#[derive(Debug, Args)]
pub struct PreprocessArgs {
    /// Continuous recording (EEGR).
    #[arg(long)]
    pub input: PathBuf,
    /// Output trial set (EEGT).
    #[arg(long)]
    pub out: PathBuf,
    /// Skip band-pass filtering.
    #[arg(long)]
    pub no_filter: bool,
    #[arg(long)]
    pub target_fs: Option<f64>,
    #[arg(long)]
    pub classes: Option<usize>,
    /// Comma-separated channel names to keep.
    #[arg(long, value_delimiter = ',')]
    pub channels: Option<Vec<String>>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Trial set (EEGT); repeat for several subjects.
    #[arg(long, required = true)]
    pub data: Vec<PathBuf>,
    /// Results document (JSON).
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub folds: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    /// Folds trained concurrently; results do not depend on it.
    #[arg(long, default_value_t = 1)]
    pub parallel_folds: usize,
    /// Directory for per-fold weights files.
    #[arg(long)]
    pub weights_out: Option<PathBuf>,
    /// Directory for per-fold confusion matrices (CSV).
    #[arg(long)]
    pub confusion_out: Option<PathBuf>,
    /// Disable learned positional embeddings.
    #[arg(long)]
    pub no_positional_embeddings: bool,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub weights: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    /// Evaluation document (JSON).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Confusion matrix (CSV).
    #[arg(long)]
    pub confusion_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    /// Results document of the first condition.
    #[arg(long)]
    pub a: PathBuf,
    /// Results document of the second condition.
    #[arg(long)]
    pub b: PathBuf,
    /// Accuracies compared: one per subject, or one per fold.
    #[arg(long, value_enum)]
    pub unit: Option<UnitArg>,
    #[arg(long)]
    pub n_perm: Option<usize>,
    /// Comparison document (JSON).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
pub enum UnitArg {
    Subject,
    Fold,
}

#[derive(Debug, Args)]
pub struct GradcheckArgs {
    #[arg(long)]
    pub seeds: Option<u64>,
    #[arg(long)]
    pub tol: Option<f64>,
    /// Report (JSON).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DescribeArgs {
    /// Print the summary as JSON.
    #[arg(long)]
    pub json: bool,
}

pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_DATA: u8 = 3;
pub const EXIT_NUMERIC: u8 = 4;

fn exit_code(class: ErrorClass) -> u8 {
    match class {
        ErrorClass::Config => EXIT_CONFIG,
        ErrorClass::Data => EXIT_DATA,
        ErrorClass::Numeric => EXIT_NUMERIC,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(e.class()))
        }
    }
}
