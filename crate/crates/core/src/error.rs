use thiserror::Error;

/// Errors raised by the tower, product and rate machinery.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("at least one component tail is required")]
    EmptyComponents,

    #[error("invalid tail specification: {0}")]
    InvalidTail(String),

    #[error("invalid tower model: {0}")]
    InvalidModel(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("tail sum from {from} is not summable for this family")]
    TruncationUnbounded { from: usize },

    #[error("n = {n} is below the validity threshold {threshold}")]
    ThresholdNotMet { n: f64, threshold: f64 },

    #[error("truncation leaks mass {leak:e}, above the budget {budget:e}")]
    TruncationTooLossy { leak: f64, budget: f64 },

    #[error("return-time support {support:?} has gcd {gcd} != 1")]
    AperiodicityViolated { gcd: usize, support: Vec<usize> },

    #[error("no mixing window with u_n >= {c} found up to horizon {horizon}")]
    MixingWindowNotFound { c: f64, horizon: usize },

    #[error("horizon {horizon} too short, need at least {required}")]
    HorizonTooShort { horizon: usize, required: usize },

    #[error("enumeration exceeds the configured bound ({0})")]
    EnumerationBound(String),

    #[error("state space of {states} cells exceeds the budget of {budget}")]
    StateSpaceBound { states: usize, budget: usize },

    #[error("replica {replica}: simultaneous return not reached within {cap} steps")]
    RunawayTrace { replica: u64, cap: u64 },

    #[error("fold is not integrable: {0}")]
    FoldNotIntegrable(String),

    #[error("fit window too noisy: {0}")]
    WindowTooNoisy(String),

    #[error("observable has zero sup-norm")]
    ZeroObservable,
}

pub type Result<T> = std::result::Result<T, Error>;
