//! Error type shared across the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("duplicate id {0:?}")]
    DuplicateId(String),

    #[error("corpus is empty")]
    EmptyCorpus,

    /// A text input failed to parse; `line` is 1-based.
    #[error("{path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },

    /// A binary or structured file violates its format contract.
    #[error("format error: {0}")]
    Format(String),

    #[error("truncated file: {0}")]
    Truncation(String),

    /// A vector row contains NaN or infinity.
    #[error("non-finite value in vector row {0}")]
    InvalidVector(usize),

    /// Paired inputs disagree on counts (query texts vs vectors, corpus vs store).
    #[error("misaligned inputs: {0}")]
    Alignment(String),

    #[error("index is empty: every document tokenized to nothing")]
    EmptyIndex,

    #[error("graph construction needs at least 2 documents, got {0}")]
    GraphTooSmall(usize),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("dimension mismatch: query has {query}, store has {store}")]
    Dim { query: usize, store: usize },

    #[error("doc id {0} out of range for {1} documents")]
    Id(u32, usize),

    #[error("invalid input: {0}")]
    Input(String),

    #[error("evaluation error: {0}")]
    Eval(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}
