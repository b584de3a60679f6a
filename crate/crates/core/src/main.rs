use std::process::ExitCode;

use clap::Parser;
use macres::cli::{run, Cli};

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("RESOLVE_LOG", "warn")).init();
    ExitCode::from(run(Cli::parse()))
}
