//! The two failure classes every subcommand reports: bad inputs or
//! arguments, and filesystem trouble. `main` maps them to exit codes 1
//! and 2 respectively.

use std::fmt;
use std::fs;
use std::io::{self, Write};
use std::path::Path;

#[derive(Debug)]
pub enum CliError {
    Validation(String),
    Io(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Validation(msg) | CliError::Io(msg) => f.write_str(msg),
        }
    }
}

macro_rules! validation_from {
    ($($source:ty),* $(,)?) => {
        $(impl From<$source> for CliError {
            fn from(e: $source) -> Self {
                CliError::Validation(e.to_string())
            }
        })*
    };
}

validation_from!(
    relicforge_core::action::ActionError,
    relicforge_core::attention::AttentionError,
    relicforge_core::cache::CacheError,
    relicforge_core::curation::CurationError,
    relicforge_core::distill::DistillError,
    relicforge_core::eval::EvalError,
    relicforge_core::trajectory::TrajectoryError,
);

pub fn read_file(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Io(format!("reading {}: {e}", path.display())))
}

pub fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| CliError::Io(format!("writing {}: {e}", path.display())))
}

/// Write to `out`, or to stdout when no path was given.
pub fn emit(out: Option<&Path>, contents: &str) -> Result<(), CliError> {
    match out {
        Some(path) => write_file(path, contents),
        None => io::stdout()
            .write_all(contents.as_bytes())
            .map_err(|e| CliError::Io(format!("writing stdout: {e}"))),
    }
}
