//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("opaque labeler `{0}` is not registered")]
    UnresolvedPredicate(String),

    #[error("opaque labeler `{name}` returned label id {returned} outside the {count}-label vocabulary")]
    LabelerContract {
        name: String,
        returned: usize,
        count: usize,
    },

    #[error("refinement path `{0}` does not resolve to a leaf")]
    InvalidStep(String),

    #[error("datapoints `{0}` and `{1}` are predicate-indistinguishable; no separator exists")]
    NoSeparator(String, String),

    #[error("datapoints `{0}` and `{1}` are indistinguishable but target different labels")]
    UnsolvableTargets(String, String),

    #[error("{what} exceeds the size guard ({size} > {limit})")]
    SizeGuard {
        what: &'static str,
        size: usize,
        limit: usize,
    },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("unknown label `{label}` in record `{record}`")]
    UnknownLabel { label: String, record: String },

    #[error("duplicate datapoint id `{0}`")]
    DuplicateId(String),

    #[error("label id {id} is out of range for a {count}-label vocabulary")]
    LabelOutOfRange { id: usize, count: usize },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("external model command failed: {0}")]
    AdapterCommand(String),

    #[error("external model output invalid: {0}")]
    AdapterOutput(String),

    #[error("pipeline stage `{stage}` failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Wraps an error with the name of the pipeline stage it occurred in.
    pub fn in_stage(self, stage: &'static str) -> Error {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }
}
