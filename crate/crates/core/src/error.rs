use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("division by zero in the prime field")]
    DivisionByZero,
    #[error("linear system is singular")]
    SingularSystem,
    #[error("modulus {0} is not a prime below 2^32")]
    InvalidModulus(u64),
    #[error("field of size {q} cannot supply {needed} distinct nonzero constants")]
    FieldTooSmall { q: u64, needed: usize },
    #[error("invalid storage constraints: {0}")]
    InvalidConstraints(String),
    #[error("({a},{b}) MDS code is infeasible for the scheme")]
    InfeasibleCode { a: u64, b: u64 },
    #[error("invalid code mixture: {0}")]
    InvalidMixture(String),
    #[error("allocation violates the partition condition: {0}")]
    InfeasiblePartition(String),
    #[error("submodel length {length} is not a multiple of the plan granularity {granularity}")]
    IncompatibleLength { length: u64, granularity: u64 },
    #[error("protocol violation: {0}")]
    ProtocolViolation(String),
    #[error("noise space of {points} points exceeds the enumeration budget {budget}")]
    BudgetExceeded { points: u128, budget: u64 },
    #[error("snapshot: {0}")]
    Snapshot(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
