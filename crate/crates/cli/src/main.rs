//! `oauc`: train, benchmark, and verify streaming AUC learners from
//! declarative TOML configs.

mod commands;
mod config;
mod output;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use config::RunConfig;

#[derive(Parser)]
#[command(
    name = "oauc",
    about = "Streaming AUC maximization with second-order surrogate losses",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Cap the rayon worker pool.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Train one model on one shuffled pass; write a snapshot and metrics.
    Train {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the seed from the config file.
        #[arg(long)]
        seed: Option<u64>,
        /// Snapshot path (JSON).
        #[arg(long, default_value = "model.json")]
        out: PathBuf,
    },
    /// Run the 4x5-fold protocol with grid search; write a CSV report.
    Experiment {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Report path (CSV).
        #[arg(long, default_value = "experiment.csv")]
        out: PathBuf,
    },
    /// Emit per-round cumulative regret with the applicable bound.
    Regret {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Trace path (CSV).
        #[arg(long, default_value = "regret.csv")]
        out: PathBuf,
    },
    /// Run the oracle suites; nonzero exit on any failure.
    Verify,
}

fn load(config: &PathBuf, seed: Option<u64>) -> anyhow::Result<RunConfig> {
    let mut run = RunConfig::from_file(config)?;
    if let Some(s) = seed {
        run.seed = s;
    }
    Ok(run)
}

fn main() -> anyhow::Result<()> {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(threads).build_global()?;
    }
    match &cli.command {
        Command::Train { config, seed, out } => commands::cmd_train(&load(config, *seed)?, out),
        Command::Experiment { config, seed, out } => {
            commands::cmd_experiment(&load(config, *seed)?, out)
        }
        Command::Regret { config, seed, out } => commands::cmd_regret(&load(config, *seed)?, out),
        Command::Verify => commands::cmd_verify(),
    }
}
