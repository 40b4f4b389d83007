//! Exit codes and the mapping from error chains onto them.

use std::fmt;

use pruw_core::Error as CoreError;

pub const INVALID: u8 = 2;
pub const CORRECTNESS: u8 = 3;
pub const IO: u8 = 4;
pub const OTHER: u8 = 5;

/// Failures raised by the front end itself.
#[derive(Debug)]
pub enum Failure {
    /// Bad configuration or arguments.
    Invalid(String),
    /// A simulated session, cost check or probe disagreed with its oracle.
    Correctness(String),
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Invalid(m) => write!(f, "{m}"),
            Failure::Correctness(m) => write!(f, "correctness check failed: {m}"),
        }
    }
}

impl std::error::Error for Failure {}

pub fn invalid(msg: impl Into<String>) -> anyhow::Error {
    Failure::Invalid(msg.into()).into()
}

/// Exit code for an error: the first cause in the chain with a known kind
/// decides.
pub fn code_for(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(f) = cause.downcast_ref::<Failure>() {
            return match f {
                Failure::Invalid(_) => INVALID,
                Failure::Correctness(_) => CORRECTNESS,
            };
        }
        if let Some(e) = cause.downcast_ref::<CoreError>() {
            return match e {
                CoreError::InvalidConstraints(_)
                | CoreError::InfeasibleCode { .. }
                | CoreError::InvalidMixture(_)
                | CoreError::InfeasiblePartition(_)
                | CoreError::IncompatibleLength { .. }
                | CoreError::InvalidModulus(_)
                | CoreError::FieldTooSmall { .. }
                | CoreError::BudgetExceeded { .. } => INVALID,
                CoreError::Snapshot(_) => IO,
                _ => OTHER,
            };
        }
        if cause.downcast_ref::<std::io::Error>().is_some() {
            return IO;
        }
        if let Some(e) = cause.downcast_ref::<serde_json::Error>() {
            return if e.is_io() { IO } else { INVALID };
        }
        if let Some(e) = cause.downcast_ref::<csv::Error>() {
            return if e.is_io_error() { IO } else { OTHER };
        }
    }
    OTHER
}
