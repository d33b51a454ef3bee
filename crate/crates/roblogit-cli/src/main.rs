//! `roblogit` — fit penalized robust logistic-regression models from CSV
//! files, trace regularization paths, and run simulation scenarios.
//!
//! Exit codes: 0 on success with all fits converged, 1 on input or numeric
//! errors, 2 when a result was written but a fit stopped at its iteration
//! budget.

mod commands;
mod config;
mod ingest;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "roblogit", version, about)]
struct Cli {
    /// Worker threads for simulation replications; defaults to the
    /// ROBLOGIT_THREADS environment variable, then to all cores.
    #[arg(long, global = true, env = "ROBLOGIT_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit one penalized model from a CSV file.
    Fit(FitArgs),
    /// Fit a descending penalty path with warm starts and BIC selection.
    Path(FitArgs),
    /// Run a simulation scenario and write its aggregate report.
    Simulate(SimulateArgs),
}

#[derive(Args)]
struct FitArgs {
    /// Input CSV: UTF-8, comma-separated, header row required.
    #[arg(long)]
    data: PathBuf,
    /// TOML config (see the config schema in the README).
    #[arg(long)]
    config: PathBuf,
    /// Where to write the JSON result.
    #[arg(long)]
    out: PathBuf,
    /// Override the solver's multi-start seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct SimulateArgs {
    /// Scenario TOML file.
    #[arg(long)]
    config: PathBuf,
    /// Where to write the aggregate JSON report.
    #[arg(long)]
    out: PathBuf,
    /// Optional JSONL file receiving one record per replication.
    #[arg(long)]
    records: Option<PathBuf>,
    /// Override the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    if let Some(threads) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .context("cannot configure the thread pool")?;
    }
    match &cli.command {
        Command::Fit(args) => {
            commands::cmd_fit(&args.data, &args.config, &args.out, args.seed)
        }
        Command::Path(args) => {
            commands::cmd_path(&args.data, &args.config, &args.out, args.seed)
        }
        Command::Simulate(args) => {
            commands::cmd_simulate(&args.config, &args.out, args.records.as_ref(), args.seed)
        }
    }
}
