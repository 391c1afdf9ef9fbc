use thiserror::Error;

/// Errors raised across discovery, testing and I/O.
#[derive(Debug, Error)]
pub enum Error {
    /// Malformed or out-of-range input: unknown nodes, bad CSV, bad flags.
    #[error("input error: {0}")]
    Input(String),
    /// A column had the wrong kind for the requested test.
    #[error("type error: {0}")]
    Type(String),
    /// Numerically degenerate input, e.g. a singular correlation submatrix.
    #[error("degenerate input: {0}")]
    Degenerate(String),
    /// Background knowledge contradicts itself or the learned marks.
    #[error("knowledge inconsistency: {0}")]
    Knowledge(String),
    /// Model fitting failed.
    #[error("fit error: {0}")]
    Fit(String),
    /// Broken internal bookkeeping (e.g. a missing separating set).
    #[error("internal error: {0}")]
    Internal(String),
    /// A conditional-independence query failed.
    #[error("test {x} _||_ {y} | {{{cond}}} failed: {source}", cond = .s.join(","))]
    Query {
        x: String,
        y: String,
        s: Vec<String>,
        #[source]
        source: Box<Error>,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Strips [`Error::Query`] wrappers down to the originating error.
    pub fn root(&self) -> &Error {
        match self {
            Error::Query { source, .. } => source.root(),
            other => other,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
