//! `switched-imu`: simulate IMU streams, dead-reckon them under either
//! integration model, and score the results against ground truth.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::RunConfig;

#[derive(Parser, Debug)]
#[command(version, about = "IMU preintegration experiments: classical vs body-frame-constant model")]
struct Cli {
    /// TOML file with defaults for any flag (flags win)
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate an IMU log and its truth trajectory from a scenario
    Simulate(RunConfig),
    /// Dead-reckon an IMU log to keyframe states with one model
    Integrate(RunConfig),
    /// Run both models over the same log and score them against truth
    Compare(RunConfig),
    /// Align an estimate to truth and report position errors
    Evaluate(RunConfig),
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let file = match &cli.config {
        Some(path) => RunConfig::from_file(path)?,
        None => RunConfig::default(),
    };
    let (run, flags): (fn(&RunConfig) -> anyhow::Result<()>, RunConfig) = match cli.command {
        Command::Simulate(c) => (commands::simulate, c),
        Command::Integrate(c) => (commands::integrate, c),
        Command::Compare(c) => (commands::compare, c),
        Command::Evaluate(c) => (commands::evaluate, c),
    };
    let cfg = flags.over(file);
    cfg.validate()?;
    run(&cfg)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
