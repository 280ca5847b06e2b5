//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by dataset handling, learners, the consensus protocol
/// and the experiment loop.
#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown label: {0:?}")]
    UnknownLabel(String),

    #[error("argmax over empty candidate set")]
    EmptyCandidates,

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("parse error at {path}:{line}: {reason}")]
    ParseError {
        path: String,
        line: usize,
        reason: String,
    },

    #[error("invalid synthetic spec: {0}")]
    InvalidSpec(String),

    #[error("pool exhausted for client {client} label {label:?}: {reason}")]
    PoolExhausted {
        client: String,
        label: String,
        reason: String,
    },

    #[error("invalid architecture: {0}")]
    InvalidArch(String),

    #[error("shard label {0:?} outside the model's label columns")]
    LabelOutsideCols(String),

    #[error("cannot train on an empty shard")]
    EmptyShard,

    #[error("label {0:?} is claimed but has no participating round")]
    UnclaimedLabel(String),

    #[error("no participant covers label column {0} and no previous value exists")]
    NoParticipants(usize),

    #[error("no public examples carry any of the evaluated labels")]
    NoEligibleExamples,

    #[error("invalid config: {0}")]
    ConfigInvalid(String),

    #[error("malformed score payload: {0}")]
    Payload(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("client {client}, iteration {iteration}: {source}")]
    Client {
        client: String,
        iteration: u32,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Annotate an error with the (client, iteration) it occurred in.
    pub fn in_client(self, client: &str, iteration: u32) -> Error {
        Error::Client {
            client: client.to_string(),
            iteration,
            source: Box::new(self),
        }
    }

    pub(crate) fn io(path: &std::path::Path, source: std::io::Error) -> Error {
        Error::Io {
            path: path.display().to_string(),
            source,
        }
    }
}
