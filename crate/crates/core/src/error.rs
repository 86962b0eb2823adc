use thiserror::Error;

/// Every failure the library can report.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("route `{id}`: {reason}")]
    InvalidRoute { id: String, reason: String },
    #[error("route `{id}`: per-rider profit {p} is negative")]
    NegativeProfit { id: String, p: f64 },
    #[error("route is inactive (outside option dominates)")]
    InactiveRoute,
    #[error("driver mass must be positive, got {0}")]
    NonPositiveMass(f64),
    #[error("schedule undefined outside the under-supplied queuing regime: {0}")]
    RegimeViolation(&'static str),
    #[error("instance has no active route")]
    NoActiveRoute,
    #[error("dimension mismatch: expected {expected} entries, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("infeasible bounds: {0}")]
    Infeasible(String),
    #[error("bisection did not converge within {0} steps")]
    NonConvergence(usize),
    #[error("target allocation is identically zero")]
    ZeroTarget,
    #[error("ratio undefined: equilibrium objective is zero")]
    UndefinedRatio,
    #[error("brute force supports at most 4 routes, instance has {0}")]
    DimensionTooLarge(usize),
    #[error("alpha must lie in [0, 1], got {0}")]
    InvalidAlpha(f64),
}

pub type Result<T> = std::result::Result<T, Error>;
