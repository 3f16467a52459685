use thiserror::Error;

use crate::optim::LsdTrace;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty batch")]
    EmptyBatch,
    #[error("invalid interval [{a}, {b}]: endpoints must be finite with a < b")]
    InvalidInterval { a: f64, b: f64 },
    #[error("non-finite value at index {index}")]
    NonFinite { index: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("unsupported dominance order {0} (expected 1 or 2)")]
    UnsupportedOrder(u8),
    #[error("rho must lie in [0, 1], got {0}")]
    InvalidRho(f64),
    #[error("alpha must lie in (0, 1], got {0}")]
    InvalidAlpha(f64),
    #[error("{n} samples is too many for exhaustive enumeration (max {max})")]
    TooLarge { n: usize, max: usize },
    #[error("standard deviation is zero")]
    ZeroStd,
    #[error("invalid measure: {0}")]
    InvalidMeasure(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("non-finite gradient at outer iteration {t}, inner iteration {tbar}")]
    NonFiniteGradient {
        t: usize,
        tbar: usize,
        trace: Box<LsdTrace>,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
