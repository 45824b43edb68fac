//! `steer`: command-line front end for the steering criteria.
//!
//! Exit codes: 0 success, 2 usage error, 3 input-data error.

mod cli;
mod commands;
mod config;
mod error;

use std::ffi::OsString;
use std::process::ExitCode;

use clap::{CommandFactory, Parser};

use cli::{Cli, Command};
use error::CliError;

fn version_json() -> String {
    serde_json::json!({
        "name": "steer",
        "version": env!("CARGO_PKG_VERSION"),
        "core_version": steering_core::VERSION,
    })
    .to_string()
}

fn run(args: Vec<OsString>) -> Result<(), CliError> {
    let args = config::expand(args)?;
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) if e.use_stderr() => {
            return Err(CliError::Usage(
                e.render().to_string().trim_end().to_string(),
            ))
        }
        Err(e) => {
            print!("{}", e.render());
            return Ok(());
        }
    };
    if cli.version {
        println!("{}", version_json());
        return Ok(());
    }
    match &cli.command {
        Some(Command::Sweep(a)) => commands::sweep(a),
        Some(Command::Mc(a)) => commands::mc(a),
        Some(Command::Threshold(a)) => commands::threshold(a),
        Some(Command::Analyze(a)) => commands::analyze(a),
        Some(Command::Bound(a)) => commands::bound(a),
        Some(Command::Synth(a)) => commands::synth(a),
        None => Err(CliError::Usage(Cli::command().render_usage().to_string())),
    }
}

fn main() -> ExitCode {
    match run(std::env::args_os().collect()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("steer: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
