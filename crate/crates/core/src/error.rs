use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid or inconsistent configuration (mismatched steps, bad parameters).
    #[error("configuration error: {0}")]
    Config(String),

    /// A distribution could not be represented within the allowed lattice size.
    #[error("truncation error: {0}")]
    Truncation(String),

    /// A function was evaluated outside its domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// A participant cannot be part of a fair pool (e.g. E[X] >= max[X]).
    #[error("participant {participant}: infeasible: {reason}")]
    Infeasible { participant: String, reason: String },

    /// A root could not be bracketed or the iteration stalled.
    #[error("solver error for participant {participant}: {reason}")]
    Solver { participant: String, reason: String },

    /// The pool as a whole is degenerate (E[S] = 0, fewer than two participants, ...).
    #[error("degenerate pool: {0}")]
    DegeneratePool(String),

    /// A precondition of a comparison or oracle does not hold.
    #[error("precondition failed: {0}")]
    Precondition(String),

    /// A numerical fault the iteration should never produce from valid input.
    #[error("numerical fault: {0}")]
    Numerical(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
