use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("I/O error: {0}")]
    Stream(#[from] io::Error),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("input contains no edges")]
    EmptyInput,

    #[error("self-loop on node {node} at line {line}")]
    SelfLoop { node: usize, line: usize },

    #[error("node index {index} out of range for graph with {num_nodes} nodes")]
    NodeOutOfRange { index: usize, num_nodes: usize },

    #[error("pair ({0}, {0}) is a self-pair")]
    SelfPair(usize),

    #[error("cannot mask {requested} {class}: only {available} available")]
    InsufficientPairs {
        class: &'static str,
        requested: usize,
        available: usize,
    },

    #[error("pair ({i}, {j}) is already masked")]
    AlreadyMasked { i: usize, j: usize },

    #[error("observed edge ({i}, {j}) has zero model probability")]
    ZeroProbabilityEdge { i: usize, j: usize },

    #[error("observed edge ({i}, {j}) has zero Poisson rate")]
    ZeroRateEdge { i: usize, j: usize },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid value: {0}")]
    InvalidValue(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("missing metadata labels for nodes {0:?}")]
    MissingLabels(Vec<usize>),

    #[error("AUC needs at least one positive and one negative label")]
    SingleClass,
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
