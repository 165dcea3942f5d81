use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: file is empty")]
    EmptyFile { path: PathBuf },

    #[error("row {row}: expected {expected} columns, found {found}")]
    RaggedRow {
        row: usize,
        expected: usize,
        found: usize,
    },

    #[error("row {row}, column {col}: cannot parse {value:?} as a number")]
    BadCell {
        row: usize,
        col: usize,
        value: String,
    },

    #[error("invalid series: {0}")]
    InvalidSeries(String),

    #[error("invalid partition: {0}")]
    InvalidPartition(#[from] PartitionViolation),

    #[error("variable {name:?} is constant over the fit range")]
    ConstantVariable { name: String },

    #[error(
        "window of context {context} + horizon {horizon} does not fit a series of length {length}"
    )]
    WindowTooLong {
        length: usize,
        context: usize,
        horizon: usize,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("dimension mismatch: {0}")]
    Shape(String),

    #[error("matrix is not positive definite: {0}")]
    NotPositiveDefinite(String),

    #[error("simulation diverged at variable {var}, time step {t}")]
    Diverged { var: usize, t: usize },

    #[error("non-finite {what} at epoch {epoch}")]
    NonFinite { what: &'static str, epoch: usize },

    #[error("empty sample")]
    EmptySample,

    #[error("too few forecast windows: {0} (need at least 5)")]
    TooFewWindows(usize),

    #[error("partitions differ between prediction and ground truth")]
    PartitionMismatch,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// First invariant a [`GroupPartition`](crate::series::GroupPartition) breaks.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PartitionViolation {
    #[error("fewer than two groups ({0})")]
    TooFewGroups(usize),
    #[error("group {0:?} is empty")]
    EmptyGroup(String),
    #[error("variable index {index} out of range for {n_vars} variables")]
    OutOfRange { index: usize, n_vars: usize },
    #[error("variable index {0} assigned to more than one group")]
    Overlap(usize),
    #[error("variable index {0} not assigned to any group")]
    Gap(usize),
    #[error("duplicate group name {0:?}")]
    DuplicateName(String),
}
