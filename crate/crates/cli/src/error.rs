use std::{fmt, io, path::PathBuf};

use qrmsim_core::QrmError;

/// Where in the config file a problem was found.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Location {
    pub line: usize,
    pub column: usize,
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {}{message}", location_prefix(.path, .location))]
    Config { path: Option<PathBuf>, location: Option<Location>, message: String },
    #[error("numerical invariant failed: {0}")]
    Numerical(String),
    #[error("i/o error on {path}: {source}")]
    Io { path: String, source: io::Error },
}

fn location_prefix(path: &Option<PathBuf>, location: &Option<Location>) -> String {
    match (path, location) {
        (Some(p), Some(l)) => format!("{}:{l}: ", p.display()),
        (Some(p), None) => format!("{}: ", p.display()),
        (None, Some(l)) => format!("line {l}: "),
        (None, None) => String::new(),
    }
}

impl CliError {
    pub fn config(message: impl Into<String>) -> Self {
        CliError::Config { path: None, location: None, message: message.into() }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config { .. } | CliError::Io { .. } => 1,
            CliError::Numerical(_) => 2,
        }
    }
}

/// Errors raised while a simulation runs are numerical; everything the core
/// rejects up front is reported through [`CliError::config`] instead.
impl From<QrmError> for CliError {
    fn from(e: QrmError) -> Self {
        CliError::Numerical(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;
