//! Crate-wide error type.
//!
//! Every failure is classified into an [`ErrorKind`] so callers (notably the
//! CLI) can map errors onto process exit codes without string matching.

use std::path::PathBuf;

/// Coarse classification of an [`Error`], used for exit-code mapping.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Malformed or inconsistent input data / parameters.
    Validation,
    /// Underlying filesystem or stream failure.
    Io,
    /// The request is well-formed but has no feasible answer
    /// (e.g. no set of N pairwise non-overlapping segments exists).
    Infeasible,
}

/// Error type shared by all modules in this crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Filesystem-level failure while touching `path`.
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// A file parsed, but its contents violate the format or an invariant.
    #[error("{0}")]
    Validation(String),

    /// A well-formed request with no feasible solution.
    #[error("{0}")]
    Infeasible(String),
}

impl Error {
    /// Build a validation error from anything displayable.
    pub fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    /// Build an infeasibility error from anything displayable.
    pub fn infeasible(msg: impl Into<String>) -> Self {
        Error::Infeasible(msg.into())
    }

    /// Wrap an [`std::io::Error`] with the path it occurred on.
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    /// The coarse class of this error.
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Io { .. } => ErrorKind::Io,
            Error::Validation(_) => ErrorKind::Validation,
            Error::Infeasible(_) => ErrorKind::Infeasible,
        }
    }
}

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;
