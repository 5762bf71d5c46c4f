//! Command-line driver for the `pisco-core` library: synthesize data, fit and
//! apply projections, evaluate them against ground truth, and run the λ/ρ and
//! spurious-correlation studies. Every command is deterministic given its
//! config and seed.

pub mod commands;
pub mod config;
pub mod error;
pub mod formats;
pub mod io;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use error::{CliError, Result};

#[derive(Debug, Parser)]
#[command(name = "pisco", version, about = "Split entangled features into style and content factors")]
pub struct Cli {
    /// JSON config for the subcommand; defaults apply when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Output directory (created if missing).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Overrides the config's seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Worker threads for sweep and spurious.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, Subcommand)]
pub enum Command {
    /// Generate a synthetic paired dataset with ground truth.
    Synth,
    /// Fit a projection from a synthesized dataset directory.
    Fit,
    /// Map features through a stored projection.
    Apply,
    /// Score a projection against ground-truth latents.
    Eval,
    /// Sweep λ × ρ × seed and report recovery metrics.
    Sweep,
    /// Run the spurious-correlation classification study.
    Spurious,
}

/// Runs the parsed command; returns the files it wrote.
pub fn run(cli: &Cli) -> Result<Vec<PathBuf>> {
    let globals = commands::Globals { config: cli.config.clone(), out: cli.out.clone(), seed: cli.seed };
    let dispatch = || match cli.command {
        Command::Synth => commands::synth::run(&globals),
        Command::Fit => commands::fit::run(&globals),
        Command::Apply => commands::apply::run(&globals),
        Command::Eval => commands::eval::run(&globals),
        Command::Sweep => commands::sweep::run(&globals),
        Command::Spurious => commands::spurious::run(&globals),
    };
    if cli.seed.is_some() && matches!(cli.command, Command::Fit | Command::Apply | Command::Eval) {
        log::warn!("--seed has no effect on `{:?}`, which is not randomized", cli.command);
    }
    match cli.jobs {
        None => dispatch(),
        Some(0) => Err(CliError::config("--jobs must be at least 1")),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::config(format!("cannot start {n} worker threads: {e}")))?
            .install(dispatch),
    }
}
