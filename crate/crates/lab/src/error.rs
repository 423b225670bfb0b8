use std::path::PathBuf;

use stbc_core::analysis::AnalysisError;
use stbc_core::codes::CodeError;
use stbc_core::constellation::ConstellationError;
use stbc_core::decoders::{DecodeError, UnknownDecoder};

#[derive(Debug, thiserror::Error)]
pub enum LabError {
    #[error(transparent)]
    UnknownCode(#[from] CodeError),
    #[error(transparent)]
    UnknownDecoder(#[from] UnknownDecoder),
    #[error("unsupported constellation: {0}")]
    UnsupportedSize(#[from] ConstellationError),
    #[error("decoder `{decoder}` does not support code `{code}`")]
    UnsupportedCode { code: String, decoder: String },
    #[error("invalid SNR range `{0}` (expected `start:step:stop` or a single value)")]
    BadSnrRange(String),
    #[error("{0}")]
    BadFlags(String),
    #[error("trial count must be at least 1")]
    NoTrials,
    #[error("SNR list is empty")]
    EmptySweep,
    #[error("verification suite needs at least one trial")]
    EmptySuite,
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error("existing file {path} does not match this sweep: {reason}")]
    ResumeMismatch { path: PathBuf, reason: String },
    #[error(transparent)]
    Decode(#[from] DecodeError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error("thread pool: {0}")]
    ThreadPool(#[from] rayon::ThreadPoolBuildError),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl LabError {
    /// 2 for bad input, 1 for runtime failures.
    pub fn exit_code(&self) -> u8 {
        match self {
            LabError::UnknownCode(_)
            | LabError::UnknownDecoder(_)
            | LabError::UnsupportedSize(_)
            | LabError::UnsupportedCode { .. }
            | LabError::BadSnrRange(_)
            | LabError::BadFlags(_)
            | LabError::NoTrials
            | LabError::EmptySweep
            | LabError::EmptySuite
            | LabError::ResumeMismatch { .. } => 2,
            _ => 1,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        LabError::Io {
            path: path.into(),
            source,
        }
    }
}
