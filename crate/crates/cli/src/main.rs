//! `equiflow`: synthesize tube datasets, train, evaluate and verify.
//!
//! Exit codes: 0 success, 1 check or evaluation failure, 2 usage error.
//! The thread count of the worker pool comes from `EQUIFLOW_THREADS`.

mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Failed(String),
    #[error(transparent)]
    Core(#[from] equiflow::Error),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Parser)]
#[command(name = "equiflow", version, about = "Equivariant velocity-field estimation on tetrahedral vessel meshes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a dataset of synthetic tubes with laminar flow.
    Synth(SynthArgs),
    /// Train a model on a dataset's training split.
    Train(TrainArgs),
    /// Evaluate a checkpoint on a dataset split.
    Eval(EvalArgs),
    /// Run the equivariance and gradient verification suite.
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub count: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Move every sample by its own random rigid motion.
    #[arg(long)]
    pub rotate: bool,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 8)]
    pub min_segments: usize,
    #[arg(long, default_value_t = 12)]
    pub max_segments: usize,
    #[arg(long, default_value_t = 2)]
    pub rings: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelKind {
    Segnn,
    Baseline,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, value_enum)]
    pub model: ModelKind,
    #[arg(long, default_value_t = 500)]
    pub epochs: usize,
    #[arg(long, default_value_t = 3e-4)]
    pub lr: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 2)]
    pub batch_size: usize,
    #[arg(long, default_value_t = 50)]
    pub patience: usize,
    /// Hidden irreps of the equivariant model.
    #[arg(long, default_value = "16x0e+8x1o+4x2e")]
    pub hidden: String,
    /// Hidden width of the baseline.
    #[arg(long, default_value_t = 32)]
    pub width: usize,
    #[arg(long, default_value_t = 2)]
    pub layers: usize,
    #[arg(long, default_value_t = 13)]
    pub k: usize,
    #[arg(long, default_value_t = 0.25)]
    pub ratio1: f64,
    #[arg(long, default_value_t = 0.25)]
    pub ratio2: f64,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Evaluate on freshly rotated copies of the test meshes.
    #[arg(long)]
    pub rotate_test: bool,
    #[arg(long, default_value_t = 0)]
    pub rotate_seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    /// Also write each test mesh with true and predicted velocities as VTK.
    #[arg(long)]
    pub export: bool,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Corrupt one edge attribute of the moved graph; the suite must fail.
    #[arg(long)]
    pub poison: bool,
    /// Also write the report here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn configure_threads() -> Result<(), CliError> {
    if let Ok(v) = std::env::var("EQUIFLOW_THREADS") {
        let n: usize = v
            .parse()
            .map_err(|_| CliError::Usage(format!("EQUIFLOW_THREADS=`{v}` is not a number")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(e.to_string()))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure_threads().and_then(|()| match cli.command {
        Command::Synth(a) => commands::synth(&a),
        Command::Train(a) => commands::train(&a),
        Command::Eval(a) => commands::eval(&a),
        Command::Verify(a) => commands::verify(&a),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                CliError::Usage(_) => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}
