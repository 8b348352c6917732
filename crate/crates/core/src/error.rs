use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown environment layout `{0}` (expected square, rooms1, rooms2 or a .json wall list)")]
    UnknownLayout(String),

    #[error("invalid environment: {0}")]
    InvalidEnvironment(String),

    #[error("ray origin ({x}, {y}) is not in free space")]
    OriginInWall { x: f64, y: f64 },

    #[error("{0}")]
    InvalidArgument(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("sensor value {value} at step {step} is outside [0, {range}]")]
    SensorOutOfRange { step: usize, value: f64, range: f64 },

    #[error("malformed {kind} file: {reason}")]
    Format { kind: &'static str, reason: String },

    #[error("unsupported {kind} format version {found} (expected {expected})")]
    Version { kind: &'static str, found: u32, expected: u32 },

    #[error("training diverged at epoch {epoch}, batch {batch}: loss = {loss}")]
    Diverged { epoch: usize, batch: usize, loss: f64 },

    #[error("architecture mismatch: {0}")]
    ArchitectureMismatch(String),

    #[error("invalid config field `{field}`: {reason}")]
    Config { field: String, reason: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            reason: reason.into(),
        }
    }
}
