//! Command-line front end for the `sparse-lqr` solvers: problem generation,
//! single solves, λ sweeps with polishing, and solver benchmarks.

pub mod args;
pub mod bench;
pub mod commands;
pub mod document;
pub mod error;
pub mod sweep;

use std::fmt;

use clap::ValueEnum;

pub use error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SolverKind {
    #[value(name = "newton-cd")]
    NewtonCd,
    Ista,
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SolverKind::NewtonCd => "newton-cd",
            SolverKind::Ista => "ista",
        })
    }
}

/// Parses `args` and runs the command, returning the process exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    use clap::Parser;
    match args::Cli::try_parse_from(args) {
        Ok(cli) => commands::execute(cli.command),
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            code
        }
    }
}
