//! `jpp`: dataset generation, training, prediction, evaluation and
//! ablation runs for the joint parsing/pose network.

pub mod commands;
pub mod error;
pub mod report;

use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

pub use commands::{run, CommandResult};
pub use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "jpp", version, about = "Joint human parsing and pose estimation on synthetic data")]
pub struct Cli {
    /// Overrides the seed in the config file.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// TOML config for the command.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Joint,
    Ss,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic dataset.
    GenData,
    /// Train a model on a dataset.
    Train {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, value_enum, default_value = "joint")]
        mode: ModeArg,
        /// Continue from the state checkpoint in the output directory.
        #[arg(long)]
        resume: bool,
        /// Ss mode: parsing checkpoint to fine-tune instead of training one.
        #[arg(long)]
        init: Option<PathBuf>,
    },
    /// Score a prediction archive, or a checkpoint, against a split.
    Eval {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value = "val")]
        split: String,
        #[arg(long, conflicts_with = "checkpoint", required_unless_present = "checkpoint")]
        pred: Option<PathBuf>,
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        /// Add the per-challenge-factor table.
        #[arg(long)]
        factors: bool,
    },
    /// Write a prediction archive for a split.
    Predict {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value = "val")]
        split: String,
        #[arg(long, conflicts_with = "ground_truth", required_unless_present = "ground_truth")]
        checkpoint: Option<PathBuf>,
        /// Export the ground truth as an archive instead of predicting.
        #[arg(long)]
        ground_truth: bool,
    },
    /// Train and evaluate the five architecture variants.
    Ablate {
        #[arg(long)]
        data: PathBuf,
    },
    /// Collect evaluation reports into one comparison table.
    Report {
        /// `eval_report.json` files or directories containing one.
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
    },
}
