//! Batch front-end for the biphoton library: reads a sectioned key-value
//! config, runs one of the evaluation pipelines and writes CSV curves plus
//! text reports into an output directory.
//!
//! Exit codes: 0 for a completed run, 1 for any error; the witness command
//! instead finishes with 10 when the antibunching inequality is violated
//! and 11 when it is not, so scripts can branch on the verdict without
//! parsing files.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "biphoton",
    version,
    about = "Coincidence patterns of photon pairs behind a birefringent double slit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the coincidence grid and separation cuts at fixed x1 + x2
    Fringe(RunArgs),
    /// Evaluate the antibunching witness; exits 10 if violated, 11 if not
    Witness(RunArgs),
    /// Sample coincidence events and histogram their separations
    Montecarlo(RunArgs),
    /// Repeat the witness run across a list of values for one parameter
    Sweep(SweepArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Path to the run configuration
    #[arg(long)]
    config: PathBuf,
    /// Output directory, created if missing
    #[arg(long)]
    out: PathBuf,
    /// Override the sampler seed from the config (montecarlo only)
    #[arg(long)]
    seed: Option<u64>,
    /// Number of worker threads; defaults to all cores
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Config key to sweep, e.g. setup.pump_waist or model.retardance
    #[arg(long)]
    param: String,
    /// Comma-separated values with units, e.g. "10 um, 20 um, 100 um"
    #[arg(long)]
    values: String,
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("biphoton: {err:#}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    let args = match &cli.command {
        Command::Fringe(a) | Command::Witness(a) | Command::Montecarlo(a) => a,
        Command::Sweep(s) => &s.run,
    };
    if let Some(threads) = args.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .context("configuring the worker pool")?;
    }
    let text = std::fs::read_to_string(&args.config)
        .with_context(|| format!("reading {}", args.config.display()))?;
    let run_config = config::parse_config(&text)
        .with_context(|| format!("in {}", args.config.display()))?;

    match &cli.command {
        Command::Fringe(a) => {
            let cuts = commands::cmd_fringe(&run_config, &a.out)?;
            println!("wrote grid.csv and {cuts} separation cut(s) to {}", a.out.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Witness(a) => {
            let report = commands::cmd_witness(&run_config, &a.out)?;
            let verdict = if report.violated { "violated" } else { "not violated" };
            println!("witness margin {}: {verdict}", report.margin);
            Ok(ExitCode::from(if report.violated { 10 } else { 11 }))
        }
        Command::Montecarlo(a) => {
            let seed = commands::cmd_montecarlo(&run_config, &a.out, a.seed)?;
            println!("wrote events.csv, histogram.csv and dip.txt (seed {seed}) to {}", a.out.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Sweep(s) => {
            let count = commands::cmd_sweep(&run_config, &s.run.out, &s.param, &s.values)?;
            println!("swept {} over {count} value(s) into {}", s.param, s.run.out.display());
            Ok(ExitCode::SUCCESS)
        }
    }
}
