use thiserror::Error;

use crate::model::ModelKind;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DataError {
    #[error("observation dimensionality must be positive")]
    ZeroDimension,
    #[error("coordinate buffer of length {len} is not a multiple of dimension {dim}")]
    RaggedCoordinates { dim: usize, len: usize },
    #[error("row {row}: expected {expected} coordinates, found {found}")]
    RowArity { row: usize, expected: usize, found: usize },
    #[error("row {row}: non-finite coordinate")]
    NonFinite { row: usize },
    #[error("{labels} labels for {points} points")]
    LabelCount { points: usize, labels: usize },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("{kind} needs {expected} observations, got {found}")]
    SubsetSize { kind: ModelKind, expected: usize, found: usize },
    #[error("{kind} expects {expected}-dimensional observations, got {found}")]
    Dimension { kind: ModelKind, expected: usize, found: usize },
    #[error("degenerate minimal subset for {0}")]
    DegenerateSubset(ModelKind),
    #[error("unknown model kind `{0}`")]
    UnknownKind(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SampleError {
    #[error("{kind} needs at least {needed} observations, data has {available}")]
    InsufficientData { kind: ModelKind, needed: usize, available: usize },
    #[error("{skipped} of {requested} hypotheses skipped after repeated degenerate draws")]
    TooManyDegenerate { skipped: usize, requested: usize },
    #[error("invalid sampler configuration: {0}")]
    InvalidConfig(&'static str),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScaleError {
    #[error("residual sequence is empty")]
    Empty,
    #[error("residual {0} is negative or non-finite")]
    InvalidResidual(usize),
    #[error("inlier count {inliers} fell below K = {k}")]
    DivergedScale { inliers: usize, k: usize },
    #[error("invalid scale configuration: {0}")]
    InvalidConfig(&'static str),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("no hypotheses supplied")]
    NoHypotheses,
    #[error("data set is empty")]
    EmptyData,
    #[error("every hypothesis was dropped while building the hypergraph")]
    EmptyHypergraph,
    #[error("hypothesis kind {found} does not match hypergraph kind {expected}")]
    KindMismatch { expected: ModelKind, found: ModelKind },
    #[error("data dimension {found} does not match {kind} ({expected})")]
    Dimension { kind: ModelKind, expected: usize, found: usize },
    #[error(transparent)]
    Scale(#[from] ScaleError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("label sequences differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("unknown scene template `{0}`")]
    UnknownTemplate(String),
    #[error("trial count must be at least 1")]
    NoTrials,
}

/// A failure of the complete fitting pipeline, tagged with the stage that raised it.
#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("hypothesis sampling failed: {0}")]
    Sampling(#[from] SampleError),
    #[error("hypergraph construction failed: {0}")]
    Construction(#[from] GraphError),
    #[error("data check failed: {0}")]
    Data(#[from] DataError),
    #[error("invalid configuration: {0}")]
    Config(String),
}

/// Failure of a repeated-trial run.
#[derive(Debug, Error)]
pub enum TrialError {
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
}

/// Failure to read or write one of the text formats.
#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    File { path: std::path::PathBuf, source: std::io::Error },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("input holds no data")]
    Empty,
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl IoError {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        IoError::Parse { line, message: message.into() }
    }
}
