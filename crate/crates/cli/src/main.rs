use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use gibo_cli::{export_curves, run_experiment, write_outputs, CliError, ExperimentConfig};

#[derive(Parser)]
#[command(name = "gibo", version, about = "Run GIBO / ARS / BO benchmark experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment described by a TOML config.
    Run {
        config: PathBuf,
        /// Override the master seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Concurrent trials (0 = all cores).
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Aggregate a rows file into per-evaluation curves.
    Export {
        rows: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn run(cli: Cli) -> Result<ExitCode, CliError> {
    match cli.command {
        Command::Run { config, seed, workers, out } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(w) = workers {
                cfg.workers = w;
            }
            let dir = out.or_else(|| cfg.output.clone()).unwrap_or_else(|| PathBuf::from("results"));
            let result = run_experiment(&cfg)?;
            write_outputs(&result, &dir)?;
            let failures = result.failures();
            for f in &failures {
                eprintln!("trial failed: {} d={} trial={}: {}", f.optimizer, f.dimension, f.trial, f.message);
            }
            eprintln!("wrote {}", dir.display());
            Ok(if failures.is_empty() { ExitCode::SUCCESS } else { ExitCode::from(3) })
        }
        Command::Export { rows, out } => {
            let curves = export_curves(&rows, &out)?;
            eprintln!("wrote {} curve points to {}", curves.len(), out.display());
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    env_logger::init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
