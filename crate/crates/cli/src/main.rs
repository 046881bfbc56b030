mod config;
mod run;

use std::process::ExitCode;

use clap::Parser;

use config::{Cli, RunSpec};
use run::Outcome;

const EXIT_ERROR: u8 = 1;
const EXIT_INFEASIBLE: u8 = 2;
const EXIT_NOT_CONVERGED: u8 = 3;

fn main() -> ExitCode {
    let result = RunSpec::resolve(Cli::parse()).and_then(|spec| run::run(&spec));
    match result {
        Ok(Outcome::Solved) => ExitCode::SUCCESS,
        Ok(Outcome::Infeasible(msg)) => {
            eprintln!("infeasible: {msg}");
            ExitCode::from(EXIT_INFEASIBLE)
        }
        Ok(Outcome::NotConverged(msg)) => {
            eprintln!("not converged: {msg}");
            ExitCode::from(EXIT_NOT_CONVERGED)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}
