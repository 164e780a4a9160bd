use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("signal too short: {len} samples, need at least {needed}")]
    TooShort { len: usize, needed: usize },

    #[error("spectrogram too short for one patch: {frames} frames, patch height {patch}")]
    TooShortForPatch { frames: usize, patch: usize },

    #[error("dimension mismatch: {what} (expected {expected}, got {got})")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("qubit {qubit} out of range for a {n_qubits}-qubit register")]
    QubitOutOfRange { qubit: usize, n_qubits: usize },

    #[error("controlled-Z needs two distinct qubits, got ({0}, {0})")]
    SameQubit(usize),

    #[error("labels contain a single class; both classes are required")]
    SingleClass,

    #[error("signal has zero power")]
    ZeroPower,

    #[error("insufficient input files in {dir}: found {found}, need {needed} (short by {})", needed - found)]
    InsufficientFiles {
        dir: PathBuf,
        found: usize,
        needed: usize,
    },

    #[error("nothing to report: {0}")]
    EmptyMetrics(&'static str),

    #[error("malformed input {path}: {reason}")]
    Malformed { path: PathBuf, reason: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("wav error on {path}: {source}")]
    Wav {
        path: PathBuf,
        #[source]
        source: hound::Error,
    },

    #[error("csv error on {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("json error on {path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True when the failure stems from user-supplied input or configuration
    /// rather than an internal fault.
    pub fn is_bad_input(&self) -> bool {
        match self {
            Error::Io { source, .. } => source.kind() == std::io::ErrorKind::NotFound,
            Error::EmptyMetrics(_) | Error::QubitOutOfRange { .. } | Error::SameQubit(_) => false,
            Error::TooShort { .. }
            | Error::TooShortForPatch { .. }
            | Error::DimensionMismatch { .. }
            | Error::InvalidParameter { .. }
            | Error::SingleClass
            | Error::ZeroPower
            | Error::InsufficientFiles { .. }
            | Error::Malformed { .. }
            | Error::Wav { .. }
            | Error::Csv { .. }
            | Error::Json { .. } => true,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
