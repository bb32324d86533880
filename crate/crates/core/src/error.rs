use crate::signal::Stage;

/// Errors raised across the processing, calibration and I/O paths.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("length mismatch: expected {expected} samples, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("non-finite value in {what} at index {index}")]
    NonFiniteInput { what: &'static str, index: usize },

    #[error("record too short: {n} samples (minimum {min})")]
    TooShort { n: usize, min: usize },

    #[error("reference source power is below the clamp floor everywhere")]
    DegenerateReference,

    #[error("wavenumber grid is not strictly monotone at index {index}")]
    NonMonotoneGrid { index: usize },

    #[error("wavenumber grid is not linear")]
    NonLinearGrid,

    #[error("grids of the fringe and the phase correction differ")]
    GridMismatch,

    #[error("stage error: {op} expects {expected}, got {actual:?}")]
    Stage {
        op: &'static str,
        expected: &'static str,
        actual: Stage,
    },

    #[error("invalid STFT parameters: {0}")]
    InvalidWindowParams(String),

    #[error("time-frequency map is empty")]
    EmptyMap,

    #[error("ridge has {valid} valid columns, need at least {needed}")]
    TooFewValidColumns { valid: usize, needed: usize },

    #[error("no dominant peak: {0}")]
    NoDominantPeak(String),

    #[error("reflector depth {depth:e} m is outside the unambiguous range +/-{limit:e} m")]
    DepthOutOfRange { depth: f64, limit: f64 },

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("dimension mismatch: expected {expected:?}, got {actual:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        actual: (usize, usize),
    },

    #[error("need at least {needed} values, got {got}")]
    TooFewValues { needed: usize, got: usize },

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
