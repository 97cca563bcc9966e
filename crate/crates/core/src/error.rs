use std::io;

use thiserror::Error;

pub type Result<T, E = VtError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum VtError {
    /// An argument fell outside the domain of an addressing or image operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A `.vtx`/`.vtn` file did not match the expected layout.
    #[error("format error: {0}")]
    Format(String),

    #[error("layout error: {0}")]
    Layout(String),

    /// The page cache could not satisfy a request (all frames locked, or too small).
    #[error("capacity error: {0}")]
    Capacity(String),

    #[error("need-buffer encoding overflow: {0}")]
    Encoding(String),

    /// Runtime state was used before it satisfied its preconditions.
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Image(#[from] image::ImageError),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl VtError {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        VtError::Domain(msg.into())
    }

    pub(crate) fn format(msg: impl Into<String>) -> Self {
        VtError::Format(msg.into())
    }
}
