use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("empty-domain: {0}")]
    EmptyDomain(String),

    #[error("non-finite-input: {0}")]
    NonFiniteInput(String),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("beta must have unit Euclidean norm, got norm {0}")]
    NotUnitVector(f64),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("need at least two groups for SE")]
    TooFewGroups,

    #[error("half-width too small: argmax hit the boundary in {hits} of {reps} replications")]
    HalfWidthTooSmall { hits: usize, reps: usize },

    #[error("degenerate sample: {0}")]
    Degenerate(String),

    #[error("csv: {0}")]
    Csv(String),

    #[error("group {index}: {source}")]
    Group { index: usize, source: Box<Error> },

    #[error("replication {index}: {source}")]
    Replication { index: usize, source: Box<Error> },
}

impl Error {
    /// The innermost error, with group and replication context stripped.
    pub fn root(&self) -> &Error {
        match self {
            Error::Group { source, .. } | Error::Replication { source, .. } => source.root(),
            other => other,
        }
    }

    /// Replication index of the failure, if it happened inside one.
    pub fn replication(&self) -> Option<usize> {
        match self {
            Error::Replication { index, .. } => Some(*index),
            Error::Group { source, .. } => source.replication(),
            _ => None,
        }
    }

    pub(crate) fn in_group(self, index: usize) -> Self {
        Error::Group {
            index,
            source: Box::new(self),
        }
    }

    pub(crate) fn in_replication(self, index: usize) -> Self {
        Error::Replication {
            index,
            source: Box::new(self),
        }
    }
}
