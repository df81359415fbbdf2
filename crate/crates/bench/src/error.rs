use thiserror::Error;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("configuration: {0}")]
    Config(String),
    /// `line` and `column` are 1-based; 0 means the whole file.
    #[error("{path}:{line}:{column}: {message}")]
    Ingest {
        path: String,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("run failed: {0}")]
    Run(String),
    #[error("could not write results: {0}")]
    Emit(String),
    #[error(transparent)]
    Model(#[from] fda_hybrid::Error),
}

impl BenchError {
    pub fn exit_code(&self) -> i32 {
        match self {
            BenchError::Config(_) => 2,
            BenchError::Ingest { .. } => 3,
            BenchError::Run(_) | BenchError::Model(_) => 4,
            BenchError::Emit(_) => 1,
        }
    }

    pub(crate) fn ingest(path: &std::path::Path, line: usize, column: usize, message: impl Into<String>) -> Self {
        BenchError::Ingest {
            path: path.display().to_string(),
            line,
            column,
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, BenchError>;
