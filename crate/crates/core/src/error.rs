use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = LpplError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum LpplError {
    /// Evaluation at or beyond the critical time, where `tc - t <= 0`.
    #[error("domain error: t = {t} is not before tc = {tc}")]
    Domain { t: f64, tc: f64 },

    #[error("singular linear system for nonlinear parameters (tc={tc}, m={m}, omega={omega})")]
    Singular { tc: f64, m: f64, omega: f64 },

    #[error("invalid window [{t1}, {t2}] for a series of length {len}")]
    InvalidWindow { t1: usize, t2: usize, len: usize },

    #[error("not enough samples: need at least {needed}, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("signal has zero variance")]
    ZeroVariance,

    #[error("invalid series: {0}")]
    InvalidSeries(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unsupported significance level {0}")]
    UnsupportedAlpha(f64),

    #[error("line {line}: {message}")]
    Csv { line: u64, message: String },

    #[error("window [{t1}, {t2}] could not be fitted: {reason}")]
    Unfittable { t1: usize, t2: usize, reason: String },

    #[error("no surviving fits, no tc forecast")]
    NoForecast,

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl LpplError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        LpplError::Io {
            path: path.into(),
            source,
        }
    }
}
