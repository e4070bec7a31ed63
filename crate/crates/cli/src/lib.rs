//! Command-line driver for the driving safety scoring pipeline.
//!
//! Every stage reads a flat `key = value` config, derives its own seed from
//! the global one, validates its inputs and only then writes artifacts into
//! the work directory.

// `!(x > 0.0)` is the idiom here for rejecting NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod artifacts;
pub mod commands;
pub mod config;
pub mod error;

use std::path::PathBuf;

use clap::{Parser, ValueEnum};
use drivesafe_core::learn::Ratio;

pub use config::PipelineConfig;
pub use error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Stage {
    Simulate,
    Extract,
    Train,
    Score,
    Report,
}

#[derive(Debug, Parser)]
#[command(name = "drivesafe", version, about = "Driving safety credit scoring pipeline")]
pub struct Cli {
    /// Pipeline stage to run.
    #[arg(value_enum)]
    pub stage: Stage,
    /// Path to the `key = value` config file.
    #[arg(long)]
    pub config: PathBuf,
    /// Global seed; overrides `seed` in the config.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Good:bad training ratio such as 1:1; overrides `ratio` in the config.
    #[arg(long)]
    pub ratio: Option<Ratio>,
    /// Work directory; overrides `work_dir` in the config.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Load the config, apply command-line overrides and run one stage.
/// Returns the human-readable summary printed on success.
pub fn run(cli: &Cli) -> Result<String, CliError> {
    let mut cfg = PipelineConfig::load(&cli.config)?;
    if let Some(dir) = &cli.out {
        cfg.work_dir = dir.clone();
    }
    if let Some(r) = cli.ratio {
        cfg.ratio = r;
    }
    let seed = cli
        .seed
        .or(cfg.seed)
        .ok_or_else(|| CliError::Config("a seed is required: set `seed` or pass --seed".into()))?;
    match cli.stage {
        Stage::Simulate => commands::simulate(&cfg, seed),
        Stage::Extract => commands::extract(&cfg),
        Stage::Train => commands::train(&cfg, seed),
        Stage::Score => commands::score(&cfg),
        Stage::Report => commands::report(&cfg),
    }
}
