use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("node index {index} out of range for {n_nodes} nodes")]
    NodeOutOfRange { index: usize, n_nodes: usize },
    #[error("feature row {row} has {found} columns, expected {expected}")]
    RaggedFeatures {
        row: usize,
        found: usize,
        expected: usize,
    },
    #[error("label {label} at node {node} is not below n_classes = {n_classes}")]
    LabelOutOfRange {
        node: usize,
        label: usize,
        n_classes: usize,
    },
    #[error("shape mismatch in {context}: expected {expected:?}, found {found:?}")]
    ShapeMismatch {
        context: &'static str,
        expected: (usize, usize),
        found: (usize, usize),
    },
    #[error("structure matrix entry ({row}, {col}) = {value} lies outside [0, 1]")]
    OutsideBox { row: usize, col: usize, value: f64 },
    #[error("invalid parameter {name} = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },
    #[error("{0} requires lambda >= 0; the smoothness bounds do not cover negative lambda")]
    TheoryOutOfRange(&'static str),
    #[error("non-finite value in {term} at iteration {iteration}")]
    NonFinite { iteration: usize, term: &'static str },
    #[error("split `{0}` is empty")]
    EmptySplit(&'static str),
    #[error("split index {index} is invalid: {reason}")]
    InvalidSplit { index: usize, reason: &'static str },
    #[error("infeasible perturbation: {0}")]
    InfeasiblePerturbation(String),
    #[error("invalid generator spec: {0}")]
    InvalidSpec(String),
    #[error("not enough labeled nodes: {available} available, {requested} requested")]
    NotEnoughLabeled { available: usize, requested: usize },
    #[error("training diverged at epoch {epoch}: loss is {loss}")]
    Diverged { epoch: usize, loss: f64 },
    #[error("graphs are incompatible: {0}")]
    IncompatibleGraphs(String),
    #[error("missing file {0}")]
    MissingFile(PathBuf),
    #[error("{file}:{line}: {message}")]
    Parse {
        file: String,
        line: usize,
        message: String,
    },
    #[error("count mismatch: {0}")]
    CountMismatch(String),
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// True for failures caused by numerical breakdown rather than bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::NonFinite { .. } | Error::Diverged { .. })
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
