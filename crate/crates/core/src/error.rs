use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("truncation dimension {dim} too small: tail mass {tail_mass:e} is not below 1e-12")]
    TruncationTooSmall { dim: usize, tail_mass: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("grid too small: density {boundary_density:e} at the boundary exceeds 1e-10")]
    GridTooSmall { boundary_density: f64 },

    #[error("outcome probability {0:e} is too small to condition on")]
    ZeroProbability(f64),

    #[error("invalid phase: {0}")]
    InvalidPhase(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Stable machine-readable tag used in CLI error records.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::TruncationTooSmall { .. } => "truncation_too_small",
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::GridTooSmall { .. } => "grid_too_small",
            Error::ZeroProbability(_) => "zero_probability",
            Error::InvalidPhase(_) => "invalid_phase",
            Error::InvalidInput(_) => "invalid_input",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }
}
