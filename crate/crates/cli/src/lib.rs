//! Command-line front end: file formats, run manifests and subcommands.

pub mod cli;
mod commands;
pub mod config;
pub mod error;
pub mod io;
pub mod manifest;

use clap::error::ErrorKind;
use clap::Parser;

use crate::cli::{Cli, Command, SUBCOMMANDS};
use crate::error::{CliError, ErrorLine, Result};

fn dispatch(cli: &Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    }
    match &cli.command {
        Command::FitSignatures(a) => commands::fit_signatures(a),
        Command::Score(a) => commands::score(a),
        Command::Augment(a) => commands::augment(a),
        Command::FitFactors(a) => commands::fit_factors(a),
        Command::Evolve(a) => commands::evolve_cmd(a),
        Command::Project(a) => commands::project(a),
        Command::SurvSearch(a) => commands::surv_search(a),
        Command::SurvPredict(a) => commands::surv_predict(a),
        Command::Km(a) => commands::km(a),
        Command::Simulate(a) => commands::simulate(a),
    }
}

/// Runs the tool on `argv` (program name first) and returns the exit code:
/// 0 on success, 1 on a runtime error, 2 on a usage error.
pub fn run(argv: Vec<String>) -> i32 {
    let argv = match config::splice(&argv, &SUBCOMMANDS) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("{}", ErrorLine(&e));
            return 1;
        }
    };
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 2,
            };
        }
    };
    match dispatch(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{}", ErrorLine(&e));
            1
        }
    }
}
