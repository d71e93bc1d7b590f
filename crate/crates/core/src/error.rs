use thiserror::Error;

/// Errors raised by construction, evaluation and ingestion.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("weights sum to {sum}, expected 1")]
    WeightsSum { sum: f64 },
    #[error("outcome {index} has non-positive probability {value}")]
    NonPositiveProbability { index: usize, value: f64 },
    #[error("empty outcome set")]
    EmptySpace,
    #[error("invalid filtration: {0}")]
    InvalidFiltration(String),
    #[error("level {level} out of range (horizon {horizon})")]
    LevelOutOfRange { level: usize, horizon: usize },
    #[error("shape mismatch: expected {expected}, got {actual}")]
    ShapeMismatch { expected: String, actual: String },
    #[error("non-finite entry at outcome {outcome}, coordinate {coord}")]
    NonFinite { outcome: usize, coord: usize },
    #[error("numeraire must have strictly positive finite coordinates")]
    InvalidNumeraire,
    #[error("exponent {value} at outcome {index} outside (1, inf)")]
    ExponentOutOfRange { index: usize, value: f64 },
    #[error("tolerance must be positive, got {0}")]
    NonPositiveTolerance(f64),
    #[error("inadmissible utility: {0}")]
    InadmissibleUtility(String),
    #[error("utility domain violation: {0}")]
    DomainViolation(String),
    #[error("utility core is not invertible: {0}")]
    NotInvertible(String),
    #[error("negative scaling factor {0}")]
    NegativeScale(f64),
    #[error("infeasible dual element: {0}")]
    InfeasibleDual(String),
    #[error("strategy unavailable: {0}")]
    StrategyUnavailable(String),
    #[error("search budget exhausted: {reason} (best bound {best})")]
    SearchBudget { reason: String, best: f64 },
    #[error("invalid levels: {0}")]
    InvalidLevels(String),
    #[error("position is not accepted at level {level} (risk {risk})")]
    NotAccepted { level: usize, risk: f64 },
    #[error("decomposition failed: stepped part has risk {risk} at level {level}")]
    DecompositionFailed { level: usize, risk: f64 },
    #[error("missing one-step measure for level {0}")]
    MissingLevel(usize),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("{location}: {message}")]
    Invalid { location: String, message: String },
    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;
