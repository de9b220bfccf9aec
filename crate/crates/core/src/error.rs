use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid spot path: {0}")]
    InvalidPath(String),
    #[error("sampling scheme is not strictly increasing near u = {at}")]
    NonMonotoneScheme { at: f64 },
    #[error("noise covariance is not positive semidefinite: {0}")]
    NotPsd(String),
    #[error("integrated step covariance is not positive semidefinite on step {step}")]
    DegenerateStep { step: usize },
    #[error("bad block geometry: {0}")]
    BadGeometry(String),
    #[error("need at least 2 observation increments, got {0}")]
    TooFewObservations(usize),
    #[error("weight denominator vanishes (zero noise and zero volatility)")]
    DegenerateDenominator,
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("quadrature did not reach tolerance {tol:e} (estimated error {estimate:e})")]
    ToleranceNotMet { tol: f64, estimate: f64 },
    #[error("tuning inputs must be positive: {0}")]
    NonPositiveInputs(String),
    #[error("bad subsampling lag {lag} for n = {n}")]
    BadLag { lag: usize, n: usize },
    #[error("MSRC weights violate bias-cancellation constraints: {0}")]
    WeightConstraintViolation(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("parse error: {0}")]
    Parse(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
