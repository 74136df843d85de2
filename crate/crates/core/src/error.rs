use thiserror::Error;

/// Errors raised by the laboratory.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("transition row {row} is not stochastic: {reason}")]
    NotStochastic { row: usize, reason: String },

    #[error("non-unique stationary law")]
    NonUniqueStationary,

    #[error("observable value {value} is not a multiple of step {step}")]
    OffLattice { value: f64, step: f64 },

    #[error("no spectral gap: chain does not contract (periodic or reducible)")]
    NoSpectralGap,

    #[error("work budget exceeded: {needed} > {budget}; {advice}")]
    BudgetExceeded {
        needed: u128,
        budget: u128,
        advice: &'static str,
    },

    #[error("degenerate process: {0}")]
    Degenerate(String),

    #[error("process not degenerate: sigma2 = {0}")]
    NotDegenerate(f64),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invariant violated: {0}")]
    InvariantViolated(String),

    #[error("no finite constants within the search box: {0}")]
    NoConstants(String),

    #[error("unsupported process: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}
