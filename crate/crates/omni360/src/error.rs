use thiserror::Error;

/// Crate-wide error type.
#[derive(Error, Debug)]
pub enum Error {
    /// Scene validation or intersection setup failed.
    #[error("invalid scene: {0}")]
    InvalidScene(String),
    /// A depth sample violated its contract (non-positive or NaN).
    #[error("invalid depth sample: {0}")]
    InvalidDepth(String),
    /// Raster dimensions do not agree.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    /// Trajectory planning failed.
    #[error("trajectory: {0}")]
    Trajectory(String),
    /// Pedestrian simulation failed.
    #[error("simulation: {0}")]
    Simulation(String),
    /// Metric computation rejected its inputs.
    #[error("metrics: {0}")]
    Metrics(String),
    /// A file format violated its schema.
    #[error("format: {0}")]
    Format(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("png: {0}")]
    Png(String),
}

impl From<png::EncodingError> for Error {
    fn from(e: png::EncodingError) -> Self {
        Error::Png(e.to_string())
    }
}

impl From<png::DecodingError> for Error {
    fn from(e: png::DecodingError) -> Self {
        Error::Png(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
