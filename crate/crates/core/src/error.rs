use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),

    /// Malformed input at a known line (1-based).
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    /// A JSON Lines record violates the tuple schema (record number is 1-based).
    #[error("record {record}: {message}")]
    Schema { record: usize, message: String },

    #[error("embedding file: {0}")]
    Embedding(String),

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error("config: {0}")]
    Config(String),

    /// A caller handed in data that breaks an operation's precondition.
    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("shape mismatch in {op}: {detail}")]
    Shape { op: &'static str, detail: String },

    #[error("non-finite value in {0}")]
    NonFinite(String),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }

    /// True for errors caused by bad user-supplied data rather than a fault in
    /// the computation itself.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::Io(_)
                | Error::Parse { .. }
                | Error::Schema { .. }
                | Error::Embedding(_)
                | Error::Checkpoint(_)
                | Error::Config(_)
                | Error::Invalid(_)
        )
    }
}
