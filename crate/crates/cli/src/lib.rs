//! Command-line front end: argument parsing, TOML run configuration,
//! JSON result documents and comparison tables.
//!
//! Exit codes: 0 on success, 1 on usage, input or configuration errors,
//! 2 when estimation fails.

pub mod args;
mod commands;
pub mod config;
pub mod document;
pub mod report;

use clap::Parser;
use focal_core::exec::Execution;
use focal_core::Error;

use crate::args::{Cli, Command};

/// Environment variable holding the worker-thread count.
pub const THREADS_ENV: &str = "FOCAL_THREADS";

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Estimation(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Estimation(_) => 2,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "error: {m}"),
            CliError::Estimation(m) => write!(f, "estimation failed: {m}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Io { .. }
            | Error::Csv(_)
            | Error::MissingColumn(_)
            | Error::NoRows { .. }
            | Error::InvalidScale(_)
            | Error::OutOfScale { .. }
            | Error::UnknownCovariate(_)
            | Error::InvalidConfig(_) => CliError::Usage(e.to_string()),
            _ => CliError::Estimation(e.to_string()),
        }
    }
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var(THREADS_ENV) else { return Ok(()) };
    let n: usize = raw.trim().parse().ok().filter(|n| *n > 0).ok_or_else(|| CliError::Usage(format!("{THREADS_ENV} must be a positive integer, got `{raw}`")))?;
    #[cfg(feature = "parallel")]
    {
        // A pool built earlier in the same process keeps its size.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    #[cfg(not(feature = "parallel"))]
    let _ = n;
    Ok(())
}

fn dispatch(cli: &Cli) -> Result<(), CliError> {
    configure_threads()?;
    let exec = if cli.sequential { Execution::Sequential } else { Execution::Parallel };
    match &cli.command {
        Command::Fit(a) => commands::fit(a, exec),
        Command::Stepwise(a) => commands::stepwise(a, exec),
        Command::Subsets(a) => commands::subsets(a, exec),
        Command::Debias(a) => commands::debias(a, exec),
        Command::Simulate(a) => commands::simulate(a, exec),
        Command::Dgp(a) => commands::dgp(a, exec),
        Command::Report(a) => commands::report(a),
    }
}

/// Runs the tool on `argv` (program name first) and returns the exit code.
pub fn run(argv: &[String]) -> i32 {
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}
