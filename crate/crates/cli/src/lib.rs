//! The `egonet` batch driver. Every subcommand writes its artifacts and a
//! `run.json` record into `--out` and nowhere else.

mod args;
mod commands;
mod config;
mod pipeline;

use std::ffi::OsString;

use clap::Parser;
use thiserror::Error;

pub use args::{Cli, Command};
pub use config::{load_synth_spec, resolve_experiment, ExperimentConfig, RUN_RECORD};
pub use pipeline::{baseline_maps, cross_validate, evaluate_baseline, load_samples, predict, scene_ids, train_all};

/// Exit status of a failed command: 1 usage, 2 data, 3 numeric.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] egonet_core::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Core(egonet_core::Error::NonFinite { .. }) => 3,
            CliError::Core(_) => 2,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

pub(crate) fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn thread_pool() -> CliResult<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var("EGONET_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| usage(format!("EGONET_THREADS must be a positive integer, got {v:?}")))?;
        builder = builder.num_threads(n);
    }
    builder.build().map_err(|e| usage(format!("thread pool: {e}")))
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let recorded: Vec<String> = argv.iter().skip(1).map(|a| a.to_string_lossy().into_owned()).collect();
    let result = thread_pool().and_then(|pool| pool.install(|| commands::execute(cli.command, &recorded)));
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("egonet: {e}");
            e.exit_code()
        }
    }
}
