use thiserror::Error;

use crate::model::ValidationReport;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },

    #[error("unsupported schema version {0} (expected 1)")]
    UnsupportedSchema(u32),

    #[error("invalid network:\n{0}")]
    Invalid(ValidationReport),

    #[error("unknown variable `{0}`")]
    UnknownVariable(String),

    #[error("variable `{variable}` has no state `{state}`")]
    UnknownState { variable: String, state: String },

    #[error("assignment does not cover variable `{0}`")]
    IncompleteAssignment(String),

    #[error("variable `{0}` appears more than once")]
    DuplicateVariable(String),

    #[error("target `{0}` is also fixed by evidence or intervention")]
    TargetFixed(String),

    #[error("evidence has probability zero")]
    ZeroProbabilityEvidence,

    #[error("distribution for `{variable}` is invalid: {reason}")]
    InvalidDistribution { variable: String, reason: String },

    #[error("remaining states of `{variable}` have zero marginal mass once `{state}` is excluded")]
    ZeroMass { variable: String, state: String },

    #[error("invalid path: {0}")]
    InvalidPath(String),

    #[error("path set is not identifiable; first edges shared with excluded paths: {0}")]
    Unidentifiable(String),

    #[error("soft evidence step {delta} is invalid: {reason}")]
    InvalidDelta { delta: f64, reason: String },

    #[error("invalid fault tree: {0}")]
    FaultTree(String),

    #[error("invalid sample data: {0}")]
    Samples(String),

    #[error("invalid analysis configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn from_json(err: serde_json::Error) -> Self {
        Error::Syntax {
            line: err.line(),
            column: err.column(),
            message: err.to_string(),
        }
    }
}
