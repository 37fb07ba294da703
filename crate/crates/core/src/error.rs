use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by graph loading, walking, transfer, training and evaluation.
#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{origin}:{line}: {message}")]
    Parse {
        origin: String,
        line: usize,
        message: String,
    },

    #[error("{origin}:{line}: negative edge weight {weight}")]
    NegativeWeight { origin: String, line: usize, weight: f64 },

    #[error("node `{0}` does not exist in the graph")]
    UnknownNode(String),

    #[error("node id {id} out of range (graph has {node_count} nodes)")]
    InvalidNode { id: usize, node_count: usize },

    #[error("label file {0} contains no labels")]
    EmptyLabels(String),

    #[error("node {0} has no outgoing transition mass")]
    EmptyDistribution(usize),

    #[error("super-node id {id} out of range ({count} super-nodes)")]
    InvalidSuperNode { id: usize, count: usize },

    #[error("super-graph has no super-nodes")]
    EmptySuperGraph,

    #[error("walk set is empty")]
    EmptyWalkSet,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("length mismatch: {left} predictions vs {right} truths")]
    LengthMismatch { left: usize, right: usize },

    #[error("configuration invalid:\n{}", .0.join("\n"))]
    Config(Vec<String>),

    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: String,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(origin: &str, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            origin: origin.to_string(),
            line,
            message: message.into(),
        }
    }
}
