//! Crate-wide error types.

use thiserror::Error;

/// Errors produced by the oracle layer.
#[derive(Debug, Error)]
pub enum OracleError {
    /// The HTTP transport failed after exhausting retries.
    #[error("transport failure after {attempts} attempt(s): {message}")]
    Transport { attempts: u32, message: String },

    /// The endpoint answered with a non-success status after retries.
    #[error("endpoint returned status {status} after {attempts} attempt(s): {body}")]
    HttpStatus {
        status: u16,
        attempts: u32,
        body: String,
    },

    /// The reply contained no standalone TRUE/FALSE verdict after retries.
    #[error("unparseable verdict after {attempts} attempt(s): {reply:?}")]
    UnparseableVerdict { attempts: u32, reply: String },

    /// The reply body was not the expected chat-completion shape.
    #[error("malformed completion response: {0}")]
    MalformedResponse(String),

    /// A pair index was outside the oracle's known universe.
    #[error("pair index out of range: ({i}, {j})")]
    IndexOutOfRange { i: usize, j: usize },

    /// Adjacency assembly aborted on the identified pair.
    #[error("oracle failed on pair ({i}, {j}): {source}")]
    PairFailed {
        i: usize,
        j: usize,
        #[source]
        source: Box<OracleError>,
    },

    /// The cache file could not be opened or appended.
    #[error("verdict cache I/O: {0}")]
    CacheIo(#[from] std::io::Error),
}

/// Crate-level error: every fallible operation returns this.
#[derive(Debug, Error)]
pub enum Error {
    /// A precondition on user-supplied data was violated.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A numerical routine failed (e.g. eigensolver non-convergence).
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// A bound evaluator's validity condition does not hold.
    #[error("bound condition `{condition}` violated: {detail}")]
    BoundCondition {
        condition: &'static str,
        detail: String,
    },

    /// Oracle-layer failure.
    #[error("oracle: {0}")]
    Oracle(#[from] OracleError),

    /// File I/O failure.
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),

    /// (De)serialization failure.
    #[error("serialization: {0}")]
    Serde(#[from] serde_json::Error),

    /// A persisted report was written by an incompatible format version.
    #[error("report format version {found} is not supported (expected {expected})")]
    ReportVersion { found: u32, expected: u32 },

    /// A deterministic internal invariant failed; indicates a bug, not bad input.
    #[error("internal invariant violated: {0}")]
    InvariantViolated(String),

    /// Failure annotated with the pipeline stage it occurred in.
    #[error("pipeline stage `{stage}`: {source}")]
    Pipeline {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// Wraps an error with the pipeline stage it occurred in.
    pub fn at_stage(self, stage: &'static str) -> Error {
        Error::Pipeline {
            stage,
            source: Box::new(self),
        }
    }

    /// The innermost error, unwrapping pipeline-stage annotations.
    pub fn root(&self) -> &Error {
        match self {
            Error::Pipeline { source, .. } => source.root(),
            other => other,
        }
    }
}

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;
