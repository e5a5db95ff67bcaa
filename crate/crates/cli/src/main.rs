//! `nedtree` binary: parse, decompose, check, emit, extract, and bench
//! subcommands over the core pipeline.
//!
//! Exit codes: 0 success, 2 usage error, 3 equivalence-check failure,
//! 4 pipeline error.

mod args;
mod commands;
mod config;

use clap::Parser;
use std::process::ExitCode;

fn main() -> ExitCode {
    let cli = args::Cli::parse();
    env_logger::Builder::new()
        .parse_filters(&cli.log_level)
        .init();
    match commands::dispatch(cli) {
        Ok(code) => code,
        Err(err) => {
            err.render();
            err.exit_code()
        }
    }
}
