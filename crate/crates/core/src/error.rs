use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, CarfacError>;

#[derive(Debug, Error)]
pub enum CarfacError {
    /// A design parameter violates its documented range.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Parameters are individually valid but produce no usable design.
    #[error("design error: {0}")]
    Design(String),

    /// An API or CLI call was inconsistent with the model (shape, length, range).
    #[error("usage error: {0}")]
    Usage(String),

    #[error("unsupported WAV encoding: {0}")]
    UnsupportedWav(String),

    #[error("sample rate mismatch: file is {file} Hz, model is {model} Hz")]
    SampleRateMismatch { file: u32, model: f64 },

    #[error("malformed {kind} data: {detail}")]
    Format { kind: &'static str, detail: String },

    #[error("golden comparison failed for {plane}: max |diff| {max_abs_diff:e} > {tolerance:e} at channel {channel}, sample {sample}")]
    Tolerance {
        plane: String,
        max_abs_diff: f64,
        tolerance: f64,
        channel: usize,
        sample: usize,
    },

    #[error("missing golden file {0}")]
    MissingGolden(PathBuf),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Wav(#[from] hound::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl CarfacError {
    /// True for a write to a closed pipe, directly or through the CSV writer.
    pub fn is_broken_pipe(&self) -> bool {
        match self {
            CarfacError::Io(e) => e.kind() == std::io::ErrorKind::BrokenPipe,
            CarfacError::Csv(e) => {
                matches!(e.kind(), csv::ErrorKind::Io(io) if io.kind() == std::io::ErrorKind::BrokenPipe)
            }
            _ => false,
        }
    }
}
