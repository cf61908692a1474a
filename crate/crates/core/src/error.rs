use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimension {0}: su(N) needs N >= 2")]
    InvalidDimension(usize),

    #[error("shape mismatch: expected {expected}, got {got}")]
    Shape { expected: String, got: String },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("assumption {assumption} violated (leakage {leakage:.3e})")]
    Assumption { assumption: &'static str, leakage: f64 },

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("singularity: {0}")]
    Singularity(String),

    #[error("integration failed: {0}")]
    Integration(String),

    #[error("I/O error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Coarse error classes surfaced by the command-line runner.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    Config,
    Infeasible,
    Numerical,
    Io,
}

impl ErrorCategory {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorCategory::Config => 2,
            ErrorCategory::Infeasible => 3,
            ErrorCategory::Numerical => 4,
            ErrorCategory::Io => 5,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ErrorCategory::Config => "config",
            ErrorCategory::Infeasible => "infeasible",
            ErrorCategory::Numerical => "numerical",
            ErrorCategory::Io => "io",
        }
    }
}

impl Error {
    pub fn category(&self) -> ErrorCategory {
        match self {
            Error::InvalidDimension(_)
            | Error::Shape { .. }
            | Error::InvalidInput(_)
            | Error::InvalidState(_)
            | Error::Config(_) => ErrorCategory::Config,
            Error::Assumption { .. } | Error::Infeasible(_) => ErrorCategory::Infeasible,
            Error::Singularity(_) | Error::Integration(_) => ErrorCategory::Numerical,
            Error::Io { .. } => ErrorCategory::Io,
        }
    }

    pub(crate) fn shape(expected: impl Into<String>, got: impl Into<String>) -> Self {
        Error::Shape {
            expected: expected.into(),
            got: got.into(),
        }
    }
}
