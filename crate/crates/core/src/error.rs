//! Crate-wide error type.

use thiserror::Error;

/// All failure modes surfaced by this crate.
#[derive(Debug, Error)]
pub enum Error {
    /// Shapes do not conform for an operation. The message names both shapes.
    #[error("dimension error: {0}")]
    Dimension(String),

    /// A row that must be normalized has (near-)zero Euclidean norm.
    #[error("degenerate vector: row {row} has norm below 1e-12")]
    DegenerateVector { row: usize },

    /// A class index or flag is outside its declared cardinality.
    #[error("label error: {0}")]
    Label(String),

    /// An internal contract was violated (e.g. non-scalar loss, empty tape).
    #[error("contract violation: {0}")]
    Contract(String),

    /// Invalid run configuration (bad fold count, zero epochs, ...).
    #[error("configuration error: {0}")]
    Config(String),

    /// A non-finite loss or gradient appeared during training.
    #[error("training diverged: {0}")]
    Diverged(String),

    /// Malformed input file. `line` is 1-based.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    /// A referenced key is missing from its table.
    #[error("unresolved key {key:?}: {context}")]
    UnresolvedKey { key: String, context: String },

    /// Labels or predictions do not match the declared task schema.
    #[error("schema error: {0}")]
    Schema(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn dimension(op: &str, detail: String) -> Self {
        Error::Dimension(format!("{op}: {detail}"))
    }

    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse { line, message: message.into() }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
