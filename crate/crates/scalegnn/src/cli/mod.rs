//! Command-line entry points.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 invariant
//! failure.

mod commands;
mod config;
mod presets;
mod report;
mod selftest;

pub use config::{ExperimentConfig, CONFIG_SCHEMA};
pub use presets::{parse_model, PathVariant};

use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_INVARIANT: i32 = 3;

#[derive(Parser)]
#[command(
    name = "scalegnn",
    version,
    about = "Scale-generalizing graph networks: datasets, training, evaluation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate train/val/test datasets plus a manifest.
    Generate(GenerateArgs),
    /// Train a model on generated datasets.
    Train(TrainArgs),
    /// Evaluate a checkpoint over one or more datasets.
    Eval(EvalArgs),
    /// Run the built-in verification suites.
    Selftest(SelftestArgs),
    /// Re-run a scaled-down experiment table end to end.
    Reproduce(ReproduceArgs),
}

#[derive(Args)]
pub struct GenerateArgs {
    /// Task: shortest-path | component-counting | tsp | physics | navigation
    #[arg(long)]
    pub task: String,
    /// Generator: er | knn | planar | lobster
    #[arg(long, default_value = "lobster")]
    pub generator: String,
    #[arg(long, default_value_t = 4)]
    pub n_min: usize,
    #[arg(long, default_value_t = 34)]
    pub n_max: usize,
    /// Training sample count (validation and test default to a quarter).
    #[arg(long, default_value_t = 2000)]
    pub count: usize,
    #[arg(long)]
    pub val_count: Option<usize>,
    #[arg(long)]
    pub test_count: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = false)]
    pub weighted: bool,
    #[arg(long, default_value_t = 0.5)]
    pub weight_min: f64,
    #[arg(long, default_value_t = 1.5)]
    pub weight_max: f64,
    /// Output directory.
    #[arg(long, default_value = "data")]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct TrainArgs {
    /// Experiment config JSON (overrides the individual flags).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Directory holding train.jsonl / val.jsonl (from `generate`).
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Model preset, e.g. iter-homo-path, homo-path, gcn, gat.
    #[arg(long, default_value = "iter-homo-path")]
    pub model: String,
    /// Path layer flavour: mpnn-max | attention | attention-sim
    #[arg(long, default_value = "mpnn-max")]
    pub path_variant: String,
    #[arg(long, default_value_t = 64)]
    pub hidden: usize,
    /// Largest training epoch; validation runs on a grid up to here.
    #[arg(long, default_value_t = 30)]
    pub epochs: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "runs/latest")]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Dataset files; each becomes one metric row group labelled by its
    /// file stem.
    #[arg(long, required = true, num_args = 1..)]
    pub data: Vec<PathBuf>,
    /// Run the greedy-walk success rate (model-call heavy).
    #[arg(long, default_value_t = false)]
    pub success_rate: bool,
    /// Cap the number of samples the success walk visits.
    #[arg(long)]
    pub success_samples: Option<usize>,
    #[arg(long, default_value = "runs/latest")]
    pub out: PathBuf,
    /// Seed recorded in the metrics CSV.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args)]
pub struct SelftestArgs {
    /// Fault-injection hook used to verify the suite actually fails:
    /// `homo-bias` plants a bias inside a homogenized layer.
    #[arg(long, hide = true)]
    pub inject_fault: Option<String>,
}

#[derive(Args)]
pub struct ReproduceArgs {
    /// lobster-generalization | weight-scaling | ablation | figure4
    #[arg(long)]
    pub table: String,
    /// Only `desk` is built in.
    #[arg(long, default_value = "desk")]
    pub scale: String,
    /// Reproduction trains models; acknowledge the compute budget.
    #[arg(long, default_value_t = false)]
    pub acknowledge_budget: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "runs/reproduce")]
    pub out: PathBuf,
}

/// Parse and dispatch; returns the process exit code.
pub fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap prints its own message; usage problems exit 1
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let result = match cli.command {
        Command::Generate(args) => commands::generate(&args),
        Command::Train(args) => commands::train_cmd(&args),
        Command::Eval(args) => commands::eval_cmd(&args),
        Command::Selftest(args) => selftest::run(&args),
        Command::Reproduce(args) => commands::reproduce(&args),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Command-level error with its exit code.
#[derive(Debug)]
pub struct CmdError {
    message: String,
    code: i32,
}

impl CmdError {
    pub fn usage(message: impl Into<String>) -> Self {
        CmdError {
            message: message.into(),
            code: EXIT_USAGE,
        }
    }

    pub fn data(message: impl Into<String>) -> Self {
        CmdError {
            message: message.into(),
            code: EXIT_DATA,
        }
    }

    pub fn invariant(message: impl Into<String>) -> Self {
        CmdError {
            message: message.into(),
            code: EXIT_INVARIANT,
        }
    }

    pub fn exit_code(&self) -> i32 {
        self.code
    }
}

impl std::fmt::Display for CmdError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<crate::tasks::DataError> for CmdError {
    fn from(e: crate::tasks::DataError) -> Self {
        CmdError::data(e.to_string())
    }
}

impl From<crate::train::TrainError> for CmdError {
    fn from(e: crate::train::TrainError) -> Self {
        CmdError::data(e.to_string())
    }
}

impl From<std::io::Error> for CmdError {
    fn from(e: std::io::Error) -> Self {
        CmdError::data(e.to_string())
    }
}
