//! Storage planning for heterogeneous databases.
//!
//! Given per-database storage fractions `mu(n)`, the planner picks a mixture
//! of up to four MDS codes, splits every database's space between them, and
//! solves for the replica subsets each coded symbol lives on. Everything is
//! computed in exact rational arithmetic.

mod alloc;
mod cost;
mod mixture;
mod partition;
mod plan;

pub use alloc::{two_class_alloc, four_class_alloc, AllocationTrace, TwoClassAlloc, FourClassAlloc, SplitTrace};
pub use cost::{total_cost, MdsCode};
pub use mixture::{
    c2_weights, mixture_c1, mixture_c2, C1Mixture, C2Branch, C2Mixture, ClassShare, MixtureWeights,
};
pub use partition::{check_condition, solve_partition, PartitionEntry, PartitionTable};
pub use plan::{build_plan, choose_mixture, CodeClass, MixtureChoice, MixtureDecision, StoragePlan};

use num::{One, Signed, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::ratio::{ceil_u64, floor_u64, int, serialize_rational, Rational};

/// The scalars the code mixture depends on: `k = 1/max mu`, `p = sum mu`,
/// `r = k p` and `s = floor(k) p`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CostScalars {
    #[serde(serialize_with = "serialize_rational")]
    pub k: Rational,
    #[serde(serialize_with = "serialize_rational")]
    pub p: Rational,
    #[serde(serialize_with = "serialize_rational")]
    pub r: Rational,
    #[serde(serialize_with = "serialize_rational")]
    pub s: Rational,
}

impl CostScalars {
    /// Builds the scalars directly from `k` and `p`.
    pub fn new(k: Rational, p: Rational) -> Result<Self> {
        if k < Rational::one() {
            return Err(Error::InvalidConstraints(format!("k = {k} must be at least 1")));
        }
        if !p.is_positive() {
            return Err(Error::InvalidConstraints(format!("p = {p} must be positive")));
        }
        let r = &k * &p;
        let s = k.floor() * &p;
        Ok(Self { k, p, r, s })
    }

    pub fn k_floor(&self) -> u64 {
        floor_u64(&self.k)
    }

    pub fn k_ceil(&self) -> u64 {
        ceil_u64(&self.k)
    }

    pub fn r_floor(&self) -> u64 {
        floor_u64(&self.r)
    }

    pub fn r_ceil(&self) -> u64 {
        ceil_u64(&self.r)
    }

    pub fn s_floor(&self) -> u64 {
        floor_u64(&self.s)
    }

    pub fn s_ceil(&self) -> u64 {
        ceil_u64(&self.s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StorageProfile {
    #[serde(serialize_with = "crate::planner::serialize_rational_vec")]
    mu: Vec<Rational>,
    scalars: CostScalars,
}

pub(crate) fn serialize_rational_vec<S: serde::Serializer>(
    v: &[Rational],
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    crate::ratio::exact_vec(v).serialize(s)
}

impl StorageProfile {
    /// Storage profile with the coding parameter fixed at `1/max mu`.
    pub fn new(mu: Vec<Rational>) -> Result<Self> {
        validate_mu(&mu)?;
        let max = mu.iter().max().cloned().expect("nonempty");
        Self::with_coding_parameter(mu, max.recip())
    }

    /// Storage profile with an explicit coding parameter `k`. Any
    /// `1 <= k <= 1/max mu` keeps every database within its per-code caps.
    pub fn with_coding_parameter(mu: Vec<Rational>, k: Rational) -> Result<Self> {
        validate_mu(&mu)?;
        let max = mu.iter().max().cloned().expect("nonempty");
        if &k * &max > Rational::one() {
            return Err(Error::InvalidConstraints(format!(
                "coding parameter {k} exceeds 1/max(mu) = {}",
                max.recip()
            )));
        }
        let p = mu.iter().fold(Rational::zero(), |acc, m| acc + m);
        let scalars = CostScalars::new(k, p)?;
        Ok(Self { mu, scalars })
    }

    pub fn mu(&self) -> &[Rational] {
        &self.mu
    }

    pub fn n(&self) -> usize {
        self.mu.len()
    }

    pub fn scalars(&self) -> &CostScalars {
        &self.scalars
    }

    pub fn p(&self) -> &Rational {
        &self.scalars.p
    }
}

/// Derives the storage profile (`k`, `p`, `r`, `s`) of a constraint vector.
pub fn derive_profile(mu: Vec<Rational>) -> Result<StorageProfile> {
    StorageProfile::new(mu)
}

fn validate_mu(mu: &[Rational]) -> Result<()> {
    if mu.is_empty() {
        return Err(Error::InvalidConstraints("no databases given".into()));
    }
    if mu.len() > 64 {
        return Err(Error::InvalidConstraints(format!(
            "{} databases given, at most 64 are supported",
            mu.len()
        )));
    }
    for (n, m) in mu.iter().enumerate() {
        if !m.is_positive() || *m > int(1) {
            return Err(Error::InvalidConstraints(format!(
                "mu[{n}] = {m} is outside (0, 1]"
            )));
        }
    }
    Ok(())
}
