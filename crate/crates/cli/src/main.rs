//! `nlw`: generate datasets, train, evaluate, render and benchmark networks
//! with look-up-table weight functions.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{DataSpec, HyperOverrides};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Run(#[from] nlw::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Run(_) => 2,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "nlw", version, about = "Networks with look-up-table weight functions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a generated dataset as CSV
    GenData(GenDataArgs),
    /// Train a network
    Train(Box<TrainArgs>),
    /// Report the error of a model on a dataset
    Eval(EvalArgs),
    /// Render the output of a two-input model as a PGM image
    Render(RenderArgs),
    /// Time forward and training iterations
    Bench(BenchArgs),
}

#[derive(Debug, clap::Args)]
pub struct GenDataArgs {
    /// circle, spirals, spirals-sparse or md2
    pub name: String,
    #[arg(long, short)]
    pub out: PathBuf,
    /// Sample count (md2)
    #[arg(long)]
    pub n: Option<usize>,
    /// Generator seed (md2, circle)
    #[arg(long)]
    pub seed: Option<u64>,
    /// Image resolution (circle)
    #[arg(long)]
    pub resolution: Option<usize>,
    /// Fraction of pixels kept for training (circle)
    #[arg(long)]
    pub fraction: Option<f64>,
    /// train, held-out or full (circle)
    #[arg(long)]
    pub part: Option<String>,
}

#[derive(Debug, clap::Args)]
pub struct TrainArgs {
    /// TOML configuration file; flags override its keys
    #[arg(long, short)]
    pub config: Option<PathBuf>,
    /// Layer sizes such as 2-32-32-1; a leading X takes the argument count
    #[arg(long)]
    pub arch: Option<String>,
    /// LW or NLW
    #[arg(long)]
    pub kind: Option<String>,
    /// Iteration budget, counted in samples
    #[arg(long)]
    pub iterations: Option<u64>,
    #[arg(long, conflicts_with = "seeds")]
    pub seed: Option<u64>,
    /// Independent runs, one output directory each
    #[arg(long, value_delimiter = ',')]
    pub seeds: Option<Vec<u64>>,
    /// Worker threads for independent seeds
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// Iterations between training-log rows
    #[arg(long)]
    pub log_every: Option<u64>,
    /// Iterations between checkpoints
    #[arg(long)]
    pub checkpoint_every: Option<u64>,
    /// Continue from a checkpoint or model file holding a training state
    #[arg(long)]
    pub resume: Option<PathBuf>,
    /// Test set CSV, read with the training-data options
    #[arg(long)]
    pub test: Option<PathBuf>,
    /// Train on this fraction of the data and test on the rest
    #[arg(long)]
    pub split: Option<f64>,
    #[arg(long)]
    pub split_seed: Option<u64>,
    /// Min-max scale arguments into [-0.5, 0.5] using the training data
    #[arg(long)]
    pub scale: bool,
    #[command(flatten)]
    pub data: DataSpec,
    #[command(flatten)]
    pub hyper: HyperOverrides,
}

#[derive(Debug, clap::Args)]
pub struct EvalArgs {
    #[arg(long, short)]
    pub model: PathBuf,
    /// Scaling written by a scaled training run
    #[arg(long)]
    pub scaling: Option<PathBuf>,
    #[command(flatten)]
    pub data: DataSpec,
}

#[derive(Debug, clap::Args)]
pub struct RenderArgs {
    #[arg(long, short)]
    pub model: PathBuf,
    #[arg(long, default_value_t = 64)]
    pub resolution: usize,
    #[arg(long, short)]
    pub out: PathBuf,
}

#[derive(Debug, clap::Args)]
pub struct BenchArgs {
    /// Architectures for the cost fit
    #[arg(long, value_delimiter = ',', default_value = "2-4-1,2-4-4-1,5-16-1,5-16-16-1,5-32-32-1")]
    pub archs: Vec<String>,
    #[arg(long, value_delimiter = ',', default_value = "LW,NLW")]
    pub kinds: Vec<String>,
    /// Iterations per timed repetition
    #[arg(long, default_value_t = 2000)]
    pub iterations: usize,
    #[arg(long, default_value_t = 7)]
    pub reps: usize,
    #[arg(long, default_value_t = 500)]
    pub warmup: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// LUT resolutions timed on --r-res-arch
    #[arg(long, value_delimiter = ',')]
    pub r_res_sweep: Option<Vec<usize>>,
    #[arg(long, default_value = "5-16-16-1")]
    pub r_res_arch: String,
    #[arg(long, short)]
    pub out: PathBuf,
    #[command(flatten)]
    pub hyper: HyperOverrides,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::GenData(a) => commands::gen_data(&a),
        Command::Train(a) => commands::train(&a),
        Command::Eval(a) => commands::eval(&a),
        Command::Render(a) => commands::render(&a),
        Command::Bench(a) => commands::bench(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
