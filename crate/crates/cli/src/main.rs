//! clm-lab: command-line entry point wiring the measure, L-series,
//! quadratic-form, Bernoulli, quartic-density and sampling pipelines.
//!
//! Every run emits a JSON report embedding the resolved configuration and
//! crate version; all randomness is seeded and logged. Exit codes:
//! 0 success, 1 usage/configuration error, 2 a mathematical invariant
//! check failed.

mod commands;
mod config;
mod report;

use clap::Parser;

use crate::commands::{Cli, Outcome};

fn main() {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            // clap help/version are not errors
            use clap::error::ErrorKind;
            match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    print!("{e}");
                    std::process::exit(0);
                }
                _ => {
                    eprintln!("{e}");
                    std::process::exit(1);
                }
            }
        }
    };
    match commands::run(cli) {
        Ok(Outcome::Pass) => std::process::exit(0),
        Ok(Outcome::AssertionFailed(msg)) => {
            eprintln!("invariant check failed: {msg}");
            std::process::exit(2);
        }
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(1);
        }
    }
}
