use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A configuration value violates one of its invariants.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("timestep {0} outside [0, 1000]")]
    TimestepOutOfRange(f64),

    /// The schedule referenced a block the history no longer (or never) held.
    /// Unreachable while the history retention invariants hold.
    #[error("internal invariant violated at step {step}: block {content_id} is not retained")]
    MissingBlock { step: usize, content_id: usize },

    #[error("trace line {line}: {message}")]
    Trace { line: usize, message: String },

    #[error("unknown metric `{name}` (valid: {valid})")]
    UnknownMetric { name: String, valid: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::InvalidConfig(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code: 1 for usage/config errors, 2 for internal invariant violations.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::MissingBlock { .. } => 2,
            _ => 1,
        }
    }
}
