//! Error type shared by every stage of the pipeline.

use thiserror::Error;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// All failure modes surfaced by the library.
///
/// Callers that need an exit status can rely on [`Error::is_internal`]:
/// internal invariant violations indicate a bug in this crate, everything
/// else is a problem with the caller's input or configuration.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter was outside its documented domain.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Raw input bytes could not be decoded as UTF-8.
    #[error("invalid UTF-8 at byte offset {offset}")]
    Ingestion { offset: usize },

    /// Structured input (counts, vocabularies, model dumps) failed to parse.
    #[error("parse error: line {line}: {message}")]
    Parse { line: usize, message: String },

    /// Input parsed but violated a structural requirement.
    #[error("data error: {0}")]
    Data(String),

    /// A statistic needed by an estimator is missing or degenerate.
    #[error("estimation error: {0}")]
    Estimation(String),

    /// A scored n-gram received probability zero.
    #[error("zero probability for n-gram [{ngram}]")]
    ZeroProbability { ngram: String },

    /// Underlying I/O failure.
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    /// An invariant of this crate was violated; always a bug here.
    #[error("internal error: {0}")]
    Internal(String),
}

impl Error {
    /// True for failures that indicate a bug in the library rather than
    /// bad input.
    pub fn is_internal(&self) -> bool {
        matches!(self, Error::Internal(_))
    }
}
