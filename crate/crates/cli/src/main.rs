//! `aegroup`: reproducible grouping experiments on synthetic scenes.
//!
//! Subcommands tie scene generation, decoding, training and evaluation
//! into file-based experiments. Every command prints the `config_hash` of
//! its effective configuration and, rerun with the same configuration and
//! seed, produces byte-identical output files.
//!
//! Exit codes: 0 success, 1 check failed, 2 I/O, 3 file format,
//! 4 shape/config mismatch, 5 degenerate input, 6 divergence.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgAction, Args, Parser, Subcommand};

mod artifacts;
mod commands;
mod config;
mod overlay;

use config::ExperimentConfig;

/// Error carrying the process exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn check_failed(message: String) -> Self {
        CliError { code: 1, message }
    }

    pub fn io(message: String) -> Self {
        CliError { code: 2, message }
    }

    pub fn format(message: String) -> Self {
        CliError { code: 3, message }
    }

    pub fn config(message: String) -> Self {
        CliError { code: 4, message }
    }
}

impl From<aegroup::Error> for CliError {
    fn from(err: aegroup::Error) -> Self {
        use aegroup::Error::*;
        let code = match &err {
            Io(_) => 2,
            Format(_) | Truncated(_) => 3,
            Parameter(_) | Shape(_) => 4,
            Degenerate(_) | Generation(_) => 5,
            Divergence(_) => 6,
        };
        CliError {
            code,
            message: err.to_string(),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(err: std::io::Error) -> Self {
        CliError::io(err.to_string())
    }
}

#[derive(Parser)]
#[command(
    name = "aegroup",
    version,
    about = "Joint detection and grouping experiments on synthetic scenes"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Options shared by every subcommand.
#[derive(Args, Clone)]
struct Common {
    /// Configuration file (sections `[run]`, `[scene]`, `[loss]`,
    /// `[decode]`, `[instance_decode]`, `[train]`, `[eval]`); defaults
    /// apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Overrides the seed from the configuration.
    #[arg(long)]
    seed: Option<u64>,

    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn experiment(&self) -> Result<ExperimentConfig, CliError> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        Ok(cfg)
    }

    fn out_dir(&self) -> Result<&PathBuf, CliError> {
        self.out
            .as_ref()
            .ok_or_else(|| CliError::config("--out DIR is required for this command".into()))
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate a batch of synthetic scenes with rendered heatmaps.
    Synth {
        #[command(flatten)]
        common: Common,
        /// Worker threads for batch generation (aggregation stays
        /// deterministic regardless).
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Decode per-joint heatmaps and tag maps into pose estimates.
    DecodePose {
        #[command(flatten)]
        common: Common,
        /// Detection and tag tensor for the primary scale.
        #[arg(value_names = ["DET", "TAG"], num_args = 2)]
        inputs: Vec<PathBuf>,
        /// Additional scale as a DET TAG pair; repeatable.
        #[arg(long, value_names = ["DET", "TAG"], num_args = 2, action = ArgAction::Append)]
        scale: Vec<PathBuf>,
        /// Also write a color overlay (portable pixmap).
        #[arg(long)]
        overlay: bool,
    },
    /// Decode a detection heatmap and tag map into instance labels.
    DecodeInstance {
        #[command(flatten)]
        common: Common,
        /// Detection and tag tensor for the primary scale.
        #[arg(value_names = ["DET", "TAG"], num_args = 2)]
        inputs: Vec<PathBuf>,
        /// Additional scale as a DET TAG pair; repeatable.
        #[arg(long, value_names = ["DET", "TAG"], num_args = 2, action = ArgAction::Append)]
        scale: Vec<PathBuf>,
    },
    /// Fit a free tag field to a generated scene by gradient descent.
    Train {
        #[command(flatten)]
        common: Common,
    },
    /// Score predictions against ground-truth scenes.
    Eval {
        #[command(flatten)]
        common: Common,
        /// Directory of predictions (poses_*.json or labels_*.aehm with
        /// identifiers_*.json, or per-scene subdirectories).
        #[arg(long)]
        pred: PathBuf,
        /// Directory of ground truth written by `synth`.
        #[arg(long)]
        gt: PathBuf,
        /// Worker threads for per-scene evaluation.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Verify the analytic loss gradients against finite differences.
    Gradcheck {
        #[command(flatten)]
        common: Common,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Synth { common, jobs } => commands::synth::run(&common.experiment()?, common.out_dir()?, jobs),
        Command::DecodePose {
            common,
            inputs,
            scale,
            overlay,
        } => commands::decode_pose::run(
            &common.experiment()?,
            common.out_dir()?,
            &inputs,
            &scale,
            overlay,
        ),
        Command::DecodeInstance {
            common,
            inputs,
            scale,
        } => commands::decode_instance::run(&common.experiment()?, common.out_dir()?, &inputs, &scale),
        Command::Train { common } => commands::train::run(&common.experiment()?, common.out_dir()?),
        Command::Eval {
            common,
            pred,
            gt,
            jobs,
        } => commands::eval::run(&common.experiment()?, common.out_dir()?, &pred, &gt, jobs),
        Command::Gradcheck { common } => {
            commands::gradcheck::run(&common.experiment()?, common.out.as_deref())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {}", err.message);
            ExitCode::from(err.code)
        }
    }
}
