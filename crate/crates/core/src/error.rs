use thiserror::Error;

use crate::gp::VarId;

/// Errors raised by the relay optimization library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid network configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid permutation: {0}")]
    InvalidPermutation(String),
    #[error("invalid allocation: {0}")]
    InvalidAllocation(String),
    #[error("compression coefficient of relay {relay} is {value}, must lie in [0, 1)")]
    BetaOutOfRange { relay: usize, value: f64 },
    #[error("{relays} relays exceed the limit of {limit} for {what}")]
    TooManyRelays {
        relays: usize,
        limit: usize,
        what: &'static str,
    },
    #[error("variable {0:?} is not present in the evaluation point")]
    MissingVariable(VarId),
    #[error("variable {var:?} has non-positive value {value}")]
    NonpositiveVariable { var: VarId, value: f64 },
    #[error("variable {0:?} is not registered in the problem")]
    UnknownVariable(VarId),
    #[error("invalid bounds for variable {0:?}")]
    InvalidBounds(VarId),
    #[error("monomial expansion point must be positive, got {0}")]
    NonpositiveExpansionPoint(f64),
    #[error("expansion point is not feasible for the cumulative problem: {0}")]
    InfeasibleExpansionPoint(String),
    #[error("cumulative point is not feasible: {0}")]
    InfeasibleCumulativePoint(String),
    #[error("grid of {points} points exceeds the limit of {limit}")]
    GridTooLarge { points: f64, limit: f64 },
    #[error("geometric program solve failed: {0}")]
    Solver(String),
}

pub type Result<T> = std::result::Result<T, Error>;
