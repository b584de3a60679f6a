//! Command-line driver: `region`, `build`, `simulate` and `sweep`.

pub mod commands;
pub mod config;

use clap::{Parser, Subcommand};

use crate::error::Error;
use crate::par;
pub use commands::{cmd_build, cmd_region, cmd_simulate, cmd_sweep, Outcome};
pub use config::{ExperimentConfig, ModeArg};

pub const EXIT_OK: u8 = 0;
pub const EXIT_ERROR: u8 = 1;
pub const EXIT_INFEASIBLE: u8 = 2;
pub const EXIT_ASYMPTOTIC: u8 = 3;
pub const EXIT_BUDGET: u8 = 4;

#[derive(Debug, Parser)]
#[command(name = "macres", version, about = "MAC resolvability codes: build, simulate, evaluate")]
pub struct Cli {
    /// Worker threads for trials and enumeration (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    pub workers: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write the resolvability region of a channel (constraints, corners, case).
    Region(commands::RegionArgs),
    /// Build a code and write its descriptor.
    Build(commands::BuildArgs),
    /// Build or replay a code and write a run report.
    Simulate(commands::SimulateArgs),
    /// Simulate over a grid of block lengths, block counts and splits.
    Sweep(commands::SweepArgs),
}

pub fn exit_code(err: &Error) -> u8 {
    match err {
        Error::InfeasibleTarget { .. } => EXIT_INFEASIBLE,
        Error::Budget { .. } | Error::Samples { .. } => EXIT_BUDGET,
        _ => EXIT_ERROR,
    }
}

/// Run one command on a pool of `--workers` threads and map the result to
/// an exit code.
pub fn run(cli: Cli) -> u8 {
    let result = par::with_workers(cli.workers, || match &cli.command {
        Command::Region(a) => cmd_region(a),
        Command::Build(a) => cmd_build(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Sweep(a) => cmd_sweep(a),
    });
    match result {
        Ok(out) => {
            for f in &out.files {
                println!("{}", f.display());
            }
            if out.asymptotic_only {
                eprintln!("warning: plan is asymptotic only (hash lengths clamped)");
                EXIT_ASYMPTOTIC
            } else {
                EXIT_OK
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
