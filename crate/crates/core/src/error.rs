use thiserror::Error;

/// Errors raised by the simulation, synthesis and benchmarking routines.
#[derive(Debug, Error)]
pub enum DcgError {
    #[error("grid error: {0}")]
    Grid(String),
    #[error("numeric error: {0}")]
    Numeric(String),
    #[error("unsupported model: {0}")]
    UnsupportedModel(String),
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("sequencing error: {0}")]
    Sequencing(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("infeasible winding numbers: {0}")]
    InfeasibleWinding(String),
    #[error("peak amplitude too low: {0}")]
    AmplitudeTooLow(String),
    #[error("degenerate scale: {0}")]
    DegenerateScale(String),
    #[error("calibration error: {0}")]
    Calibration(String),
    #[error("fit error: {0}")]
    Fit(String),
    #[error("channel has no leakage space (total dimension {0})")]
    NoLeakageSpace(usize),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, DcgError>;
