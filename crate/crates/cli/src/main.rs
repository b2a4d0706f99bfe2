mod commands;
mod config;
mod convert;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::RunConfig;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] asmp_core::Error),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(e) if e.is_numerical() => 3,
            _ => 2,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "asmp", version, about = "Graph denoising with a learnable structure, and the classifier built on it")]
struct Cli {
    /// key = value configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "asmp-out")]
    out: PathBuf,
    /// Overrides the config's `seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides the config's `threads`.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve the joint denoising problem on a bundle's features and structure.
    Denoise { bundle: PathBuf },
    /// Train and evaluate the classifier, and the fixed-structure baseline.
    TrainEval { bundle: PathBuf },
    /// Train both models on perturbed copies of the bundle across a grid of levels.
    AttackSweep { bundle: PathBuf },
    /// Objective per layer, normalized by the first layer.
    ConvergenceReport { bundle: PathBuf },
    /// Write a bundle from an external dataset or a synthetic generator.
    Convert {
        #[command(subcommand)]
        source: convert::Source,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(threads) = cli.threads {
        cfg.threads = threads;
    }
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build()
        .map_err(|e| CliError::Io(format!("thread pool: {e}")))?;
    let out = pool.install(|| match &cli.command {
        Command::Denoise { bundle } => commands::denoise(bundle, &cfg),
        Command::TrainEval { bundle } => commands::train_eval(bundle, &cfg),
        Command::AttackSweep { bundle } => commands::attack_sweep(bundle, &cfg),
        Command::ConvergenceReport { bundle } => commands::convergence_report(bundle, &cfg),
        Command::Convert { source } => convert::run(source, &cfg),
    })?;
    out.commit(&cli.out, &cfg)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("ASMP_LOG", "warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
