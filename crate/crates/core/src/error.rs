use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid truncation: N = {0} (need N >= 2)")]
    InvalidTruncation(usize),

    #[error("invalid Hilbert space: {0}")]
    InvalidHilbertSpace(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("state not normalized: |norm^2 - 1| = {0:e}")]
    NotNormalized(f64),

    #[error("invalid density matrix: {0}")]
    InvalidDensityMatrix(String),

    #[error("operator is not Hermitian (max deviation {0:e})")]
    NotHermitian(f64),

    #[error("truncation inadequate: {0}")]
    Truncation(String),

    #[error("drive misuse: {0}")]
    DriveMisuse(String),

    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: String, reason: String },

    #[error("singular mapping: {0}")]
    SingularMapping(String),

    #[error("integration failure: {0}")]
    Integration(String),

    #[error("analysis failure: {0}")]
    Analysis(String),

    #[error("time grid mismatch: {0}")]
    GridMismatch(String),

    #[error("configuration error in `{field}`: {reason}")]
    Config { field: String, reason: String },

    #[error("unknown preset `{0}`")]
    UnknownPreset(String),

    #[error("run `{run}` failed: {source}")]
    Run {
        run: String,
        #[source]
        source: Box<Error>,
    },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("serialization error: {0}")]
    Serialization(String),
}

/// Coarse failure category, used by the CLI for exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    Validation,
    Integration,
    Analysis,
    Io,
}

impl Error {
    pub(crate) fn param(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    pub fn category(&self) -> ErrorCategory {
        match self {
            Error::Integration(_) | Error::Truncation(_) => ErrorCategory::Integration,
            Error::Analysis(_) | Error::GridMismatch(_) => ErrorCategory::Analysis,
            Error::Io { .. } | Error::Serialization(_) => ErrorCategory::Io,
            Error::Run { source, .. } => source.category(),
            _ => ErrorCategory::Validation,
        }
    }
}
