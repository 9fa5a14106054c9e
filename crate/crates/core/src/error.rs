//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by any sbx-core operation.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("all input vectors were dropped; the basis would be empty")]
    EmptyBasis,

    #[error("query budget exhausted")]
    BudgetExhausted,

    #[error("instance is misclassified by the target model; nothing to attack")]
    MisclassifiedInstance,

    #[error("no adversarial candidate exists: {0}")]
    NoAdversary(String),

    #[error("enumeration guard exceeded: {combinations} candidate sets (limit {limit})")]
    EnumerationGuard { combinations: u128, limit: u128 },

    #[error("solver failed to converge: {0}")]
    NotConverged(String),

    #[error("model file invalid: {0}")]
    InvalidModel(String),

    #[error("dataset file invalid: {0}")]
    InvalidDataset(String),

    #[error("basis file invalid: {0}")]
    InvalidBasisFile(String),

    #[error("experiment configuration invalid: {0}")]
    InvalidExperiment(String),

    #[error("report mismatch: {0}")]
    ReportMismatch(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
