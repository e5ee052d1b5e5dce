use crate::signals::AdmissibilityReport;

/// Errors produced by model construction and analysis.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("{name} must be positive (got {value})")]
    NonPositiveRate { name: &'static str, value: f64 },

    #[error("switching amplitude must satisfy 0 <= epsilon < sigma_bar (epsilon = {epsilon}, sigma_bar = {sigma_bar})")]
    AmplitudeOutOfRange { epsilon: f64, sigma_bar: f64 },

    #[error("segment {index} has non-positive duration {duration}")]
    NonPositiveDuration { index: usize, duration: f64 },

    #[error("a switching signal needs at least one segment")]
    EmptySignal,

    #[error("duration must be non-negative (got {0})")]
    NegativeDuration(f64),

    #[error("occupancy must lie in [0, 1] (got {0})")]
    OccupancyOutOfRange(f64),

    #[error("schedule rejected: {0}")]
    Inadmissible(AdmissibilityReport),

    #[error("{context}: expected dimension {expected}, got {actual}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("matrix is not Metzler: entry ({row}, {col}) = {value} is negative")]
    NotMetzler { row: usize, col: usize, value: f64 },

    #[error("matrix is not Hurwitz: spectral abscissa {0} is not below -1e-10")]
    NotHurwitz(f64),

    #[error("{vector}[{index}] = {value} must be non-negative")]
    NegativeEntry {
        vector: &'static str,
        index: usize,
        value: f64,
    },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("no entrainment after {periods} periods (period-map residual {residual:.3e})")]
    NoEntrainment { periods: usize, residual: f64 },

    #[error("state left the unit cube at t = {time:.6}: x[{site}] = {value:.6e}; use a smaller integration step")]
    StateEscaped { time: f64, site: usize, value: f64 },

    #[error("invalid signal document: {0}")]
    SignalFormat(String),

    #[error("{0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
