mod commands;
mod config;
mod failure;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::Format;
use config::{ExperimentConfig, Overrides};
use kgexplain_core::synthetic::SyntheticConfig;

#[derive(Parser)]
#[command(
    name = "kgexplain",
    version,
    about = "Explain knowledge-graph embedding predictions"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment config (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads, each explaining one selected triple at a time; overrides the config.
    #[arg(long)]
    workers: Option<usize>,
    /// Replace the seed of every stochastic stage.
    #[arg(long)]
    seed_override: Option<u64>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Subcommand)]
enum Command {
    /// Train the embedding model; writes a checkpoint and the loss curve.
    Train(Common),
    /// Sample the evaluation triples from a rank cohort of the test split.
    Select {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Run every configured explainer on every selected triple.
    Explain {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[arg(long)]
        selection: Option<PathBuf>,
    },
    /// Per-algorithm metric reports and the comparison table.
    Evaluate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        selection: Option<PathBuf>,
    },
    /// Export the Pareto fronts of all runs.
    Pareto(Common),
    /// Write a seeded synthetic dataset.
    Generate {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 50)]
        entities: usize,
        #[arg(long, default_value_t = 5)]
        clusters: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
}

fn load(common: &Common) -> failure::CmdResult<config::Loaded> {
    ExperimentConfig::load(
        &common.config,
        &Overrides {
            out: common.out.clone(),
            workers: common.workers,
            seed: common.seed_override,
        },
    )
}

fn run(cli: Cli) -> failure::CmdResult<()> {
    match cli.command {
        Command::Train(c) => commands::train(&load(&c)?),
        Command::Select { common, checkpoint } => {
            commands::select(&load(&common)?, checkpoint.as_deref())
        }
        Command::Explain {
            common,
            checkpoint,
            selection,
        } => commands::explain(&load(&common)?, checkpoint.as_deref(), selection.as_deref()),
        Command::Evaluate { common, selection } => {
            commands::evaluate(&load(&common)?, selection.as_deref(), common.format)
        }
        Command::Pareto(c) => commands::pareto(&load(&c)?, c.format),
        Command::Generate {
            out,
            entities,
            clusters,
            seed,
        } => commands::generate(
            &out,
            &SyntheticConfig {
                num_entities: entities,
                num_clusters: clusters,
                seed,
                ..Default::default()
            },
        ),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.exit_code() as u8)
        }
    }
}
