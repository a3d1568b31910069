use thiserror::Error;

/// Errors produced while building, fitting or querying a model.
#[derive(Debug, Error)]
pub enum Error {
    #[error("index {index} out of range for dimension {dim} of size {size}")]
    Bounds { dim: usize, index: usize, size: usize },

    #[error("dense tensor of {requested} entries exceeds the cap of {cap}")]
    Capacity { requested: usize, cap: usize },

    #[error("dimension {dim} has a single distinct value")]
    DegenerateDimension { dim: usize },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("optimization diverged at iteration {iteration}: objective {objective}")]
    Divergence { iteration: usize, objective: f64 },

    #[error("evidence has zero likelihood under every component")]
    ZeroLikelihood,

    #[error("schema mismatch: {0}")]
    Schema(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code: 2 for input problems, 3 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Divergence { .. } | Error::ZeroLikelihood => 3,
            _ => 2,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
