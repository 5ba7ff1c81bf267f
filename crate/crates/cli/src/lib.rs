//! `hfpc`: train the background reward head, gate generated images, and
//! report agreement with human labels.
//!
//! Exit codes: 0 success, 1 data or validation failure, 2 usage error.

mod args;
mod commands;
mod evaluate;

use std::ffi::OsString;
use std::fmt::Display;
use std::path::Path;

use clap::Parser;
use thiserror::Error;

pub use args::Cli;

pub const EXIT_OK: i32 = 0;
pub const EXIT_DATA: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Data(_) => EXIT_DATA,
        }
    }

    /// A data error prefixed with the offending file.
    pub(crate) fn at(path: &Path, err: impl Display) -> Self {
        CliError::Data(format!("{}: {err}", path.display()))
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

/// Parses `args` (program name first) and runs the subcommand. Messages
/// go to stdout (help, results) or stderr (errors, timing).
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match commands::dispatch(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
