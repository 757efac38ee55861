use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid code distance dx={dx}, dz={dz}: both must be odd and >= 3")]
    InvalidDistance { dx: usize, dz: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: String, got: String },

    #[error("invalid fault location: {0}")]
    InvalidLocation(String),

    #[error("decoding graph needs a hyperedge: {0}")]
    Hyperedge(String),

    #[error("canonicalization did not converge after {0} passes")]
    NoConvergence(usize),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("format error: {0}")]
    Format(String),

    #[error("latency model diverged: {0}")]
    Diverged(String),

    #[error("fit failed: {0}")]
    Fit(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
