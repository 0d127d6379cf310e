//! Command-line front end for `condguide`.
//!
//! [`run`] parses arguments, resolves parameters (flag, then config file,
//! then default) and dispatches to one subcommand. Failures map to exit
//! codes 1 (usage), 2 (I/O) and 3 (invalid data).

pub mod args;
mod commands;
pub mod config;
pub mod error;
pub mod inputs;
pub mod report;

use std::ffi::OsString;

use clap::Parser;

use crate::args::Cli;
use crate::config::{ConfigFile, Settings};
use crate::error::{CliError, CliResult};

pub const JOBS_ENV: &str = "CONDGUIDE_JOBS";

/// Runs one invocation and returns the process exit code. Errors are
/// printed to stderr.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // --help and --version come through here too.
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.category.exit_code()
        }
    }
}

fn jobs_from_env() -> CliResult<Option<usize>> {
    match std::env::var(JOBS_ENV) {
        Ok(v) if v.trim().is_empty() => Ok(None),
        Ok(v) => v.trim().parse().map(Some).map_err(|_| {
            CliError::usage(format!("{JOBS_ENV} must be a positive integer, got {v:?}"))
        }),
        Err(_) => Ok(None),
    }
}

/// Resolves settings for `cli` without running anything.
pub fn resolve_settings(cli: &Cli) -> CliResult<Settings> {
    let config = match &cli.config {
        Some(path) => ConfigFile::load(path)?,
        None => ConfigFile::default(),
    };
    Settings::resolve(&cli.params, &config, cli.jobs, jobs_from_env()?)
}

pub fn execute(cli: &Cli) -> CliResult<()> {
    let settings = resolve_settings(cli)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(settings.jobs)
        .build()
        .map_err(|e| {
            CliError::usage(format!(
                "cannot start {} worker threads: {e}",
                settings.jobs
            ))
        })?;
    pool.install(|| commands::dispatch(&cli.command, &settings, cli.report.as_deref()))
}
