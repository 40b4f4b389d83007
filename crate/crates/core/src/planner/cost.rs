use serde::Serialize;

use crate::error::{Error, Result};
use crate::pruw::ClassGeometry;
use crate::ratio::{rat, Rational};

/// A `(K, R)` MDS code: groups of `K` parameters, each coded symbol
/// replicated on `R` databases.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct MdsCode {
    #[serde(rename = "K")]
    pub k: u64,
    #[serde(rename = "R")]
    pub r: u64,
}

impl MdsCode {
    pub fn new(k: u64, r: u64) -> Self {
        Self { k, r }
    }

    pub fn total_cost(&self) -> Result<Rational> {
        total_cost(self.k, self.r)
    }

    pub fn geometry(&self) -> Result<ClassGeometry> {
        ClassGeometry::new(self.k as usize, self.r as usize)
    }
}

/// Normalized read-plus-write cost of one session under a `(a, b)` code:
/// `4b/(b-a-1)` when `b-a` is odd, `(4b-2)/(b-a-2)` when even.
pub fn total_cost(a: u64, b: u64) -> Result<Rational> {
    let infeasible = Error::InfeasibleCode { a, b };
    if a == 0 || b <= a {
        return Err(infeasible);
    }
    let diff = b - a;
    let (num, den) = if diff % 2 == 1 {
        (4 * b, diff - 1)
    } else {
        (4 * b - 2, diff.saturating_sub(2))
    };
    if den == 0 {
        return Err(infeasible);
    }
    Ok(rat(num as i64, den as i64))
}
