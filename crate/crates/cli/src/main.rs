mod args;
mod commands;
mod config;
mod dataset;
mod error;
mod manifest;

use std::process::ExitCode;

use clap::Parser;

use crate::args::{Cli, Command};
use crate::error::{CliError, CliResult};

fn run(cli: &Cli) -> CliResult<()> {
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return Err(CliError::Config("--jobs must be at least 1".into()));
        }
        // Fails only if a pool already exists, which cannot happen here.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global();
    }
    let root = cli.out_root.as_ref();
    match &cli.command {
        Command::Phantom(a) => commands::phantom(a, root),
        Command::Verify(a) => commands::verify(a),
        Command::Track(a) => commands::track(a),
        Command::Strain(a) => commands::strain(a),
        Command::Eval(a) => commands::eval(a),
        Command::Sweep(a) => commands::sweep(a, root),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
