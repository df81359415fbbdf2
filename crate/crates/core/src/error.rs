use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error("insufficient data: need at least {needed} observations, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("rank error: requested {requested} components but only {available} positive eigenvalues")]
    Rank { requested: usize, available: usize },

    #[error("index {index} out of range (have {available})")]
    Index { index: usize, available: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("selection failed: {0}")]
    Selection(String),

    #[error("invalid fold assignment: {0}")]
    Fold(String),
}

pub type Result<T> = std::result::Result<T, Error>;
