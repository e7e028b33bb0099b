use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    #[error("denominator {value:e} is below the degeneracy threshold {threshold:e}")]
    DegenerateDenominator { value: f64, threshold: f64 },

    #[error("path was simulated without retained innovations")]
    MissingInnovations,

    #[error("estimator requires the observed process (X_0 = 0), got a stationary path")]
    WrongVariant,

    #[error("n = {n} exceeds the {route} cap of {cap}")]
    TooLarge { n: usize, cap: usize, route: &'static str },

    #[error("sample is empty")]
    EmptySample,

    #[error("sample contains a non-finite value at index {index}")]
    NonFiniteValue { index: usize },

    #[error("sample of size {size} is too small (need at least {min})")]
    TooSmall { size: usize, min: usize },

    #[error("rate fit needs at least 3 cells with at least 100 replications each, got {got}")]
    InsufficientCells { got: usize },

    #[error("rate fit input must be positive: {what} = {value}")]
    NonPositiveValue { what: &'static str, value: f64 },

    #[error("schedule `{name}` is not CLT-valid: {reason}")]
    InvalidSchedule { name: String, reason: String },

    #[error("{excluded} of {total} paths were degenerate, above the abort threshold")]
    TooManyDegenerate { excluded: usize, total: usize },
}

impl Error {
    pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { field, reason: reason.into() }
    }
}
