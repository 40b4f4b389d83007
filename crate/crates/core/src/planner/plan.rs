use num::{BigInt, Integer, One, ToPrimitive, Zero};
use serde::Serialize;

use super::alloc::{two_class_alloc, four_class_alloc, AllocationTrace};
use super::cost::MdsCode;
use super::mixture::{mixture_c1, mixture_c2, C1Mixture, C2Mixture, ClassShare, MixtureWeights};
use super::partition::{solve_partition, PartitionTable};
use super::{serialize_rational_vec, CostScalars, StorageProfile};
use crate::error::{Error, Result};
use crate::pruw::ClassGeometry;
use crate::ratio::{int, serialize_rational, sum, Exact, Rational};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum MixtureChoice {
    /// Floor-only mixture over `(floor k, floor s)` and `(floor k, ceil s)`.
    C1,
    /// Four-code mixture over the floor/ceiling combinations of `k` and `r`.
    C2,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MixtureDecision {
    /// `None` when some required code is infeasible.
    pub c1: Option<Exact>,
    pub c2: Option<Exact>,
    pub chosen: MixtureChoice,
    #[serde(serialize_with = "serialize_rational")]
    pub chosen_cost: Rational,
    /// Weights of the four-code mixture (reported even when C1 is chosen).
    pub weights: MixtureWeights,
    pub trace: AllocationTrace,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CodeClass {
    pub code: MdsCode,
    #[serde(serialize_with = "serialize_rational")]
    pub fraction: Rational,
    #[serde(serialize_with = "serialize_rational_vec")]
    pub alloc: Vec<Rational>,
    #[serde(serialize_with = "serialize_rational")]
    pub cost: Rational,
    pub geometry: ClassGeometry,
    pub partitions: PartitionTable,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StoragePlan {
    pub profile: StorageProfile,
    pub decision: MixtureDecision,
    /// Active classes only (nonzero fraction).
    pub classes: Vec<CodeClass>,
    /// Smallest submodel length at which every partition holds a whole
    /// number of subpackets.
    pub granularity: u64,
    pub submodels: u64,
    /// Submodel length after padding.
    pub length: u64,
    pub requested_length: u64,
}

impl StoragePlan {
    pub fn n(&self) -> usize {
        self.profile.n()
    }

    pub fn theoretical_cost(&self) -> &Rational {
        &self.decision.chosen_cost
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plan serialization")
    }
}

/// Plans storage for `m` submodels of `l` parameters each.
///
/// Picks the cheaper feasible mixture (the floor-only one on ties), computes
/// allocations and partitions for every active class, and checks `l` against
/// the plan granularity. With `pad` set, `l` is rounded up to the next
/// multiple of the granularity instead of failing.
pub fn build_plan(profile: &StorageProfile, m: u64, l: u64, pad: bool) -> Result<StoragePlan> {
    if m < 2 {
        return Err(Error::InvalidConstraints(format!("need at least 2 submodels, got {m}")));
    }
    if l == 0 {
        return Err(Error::InvalidConstraints("submodel length must be positive".into()));
    }
    let sc = profile.scalars();
    let c1 = mixture_c1(sc);
    let c2 = mixture_c2(sc);
    let weights = super::mixture::c2_weights(sc);
    let use_c2 = prefer_c2(&c1, &c2)? == MixtureChoice::C2;

    let (chosen, chosen_cost, slots, allocs, trace) = if use_c2 {
        let mix = c2.as_ref().expect("checked");
        if mix.weights.alpha.is_one() {
            let la = two_class_alloc(profile)?;
            (MixtureChoice::C2, mix.cost.clone(), mix.classes[..2].to_vec(), vec![la.hat1, la.hat2], la.trace)
        } else {
            let w = &mix.weights;
            let la = four_class_alloc(profile, &w.alpha, &w.beta, &w.delta)?;
            (
                MixtureChoice::C2,
                mix.cost.clone(),
                mix.classes.clone(),
                vec![la.hat1, la.hat2, la.bar1, la.bar2],
                la.trace,
            )
        }
    } else {
        let mix = c1.as_ref().expect("checked");
        let la = two_class_alloc(profile)?;
        (MixtureChoice::C1, mix.cost.clone(), mix.classes.clone(), vec![la.hat1, la.hat2], la.trace)
    };

    let mut classes = Vec::new();
    for (share, alloc) in slots.into_iter().zip(allocs) {
        if share.fraction.is_zero() {
            if alloc.iter().any(|a| !a.is_zero()) {
                return Err(Error::InvalidMixture(format!(
                    "class {:?} has zero fraction but nonzero allocation",
                    share.code
                )));
            }
            continue;
        }
        classes.push(plan_class(share, alloc)?);
    }

    let mut granularity = BigInt::one();
    for class in &classes {
        let block = int((class.geometry.y * class.geometry.k) as i64);
        for e in &class.partitions.entries {
            granularity = granularity.lcm((&e.eta / &block).denom());
        }
    }
    let granularity = granularity
        .to_u64()
        .ok_or_else(|| Error::InvalidMixture("plan granularity exceeds u64".into()))?;

    let length = if l.is_multiple_of(granularity) {
        l
    } else if pad {
        l.div_ceil(granularity) * granularity
    } else {
        return Err(Error::IncompatibleLength { length: l, granularity });
    };

    Ok(StoragePlan {
        profile: profile.clone(),
        decision: MixtureDecision {
            c1: c1.ok().map(|c| Exact(c.cost)),
            c2: c2.ok().map(|c| Exact(c.cost)),
            chosen,
            chosen_cost,
            weights,
            trace,
        },
        classes,
        granularity,
        submodels: m,
        length,
        requested_length: l,
    })
}

fn prefer_c2(c1: &Result<C1Mixture>, c2: &Result<C2Mixture>) -> Result<MixtureChoice> {
    match (c1, c2) {
        (Ok(a), Ok(b)) if b.cost < a.cost => Ok(MixtureChoice::C2),
        (Ok(_), _) => Ok(MixtureChoice::C1),
        (Err(_), Ok(_)) => Ok(MixtureChoice::C2),
        (Err(e), Err(_)) => Err(e.clone()),
    }
}

/// The cheaper feasible mixture for `sc` and its cost. Ties go to the
/// floor-only mixture.
pub fn choose_mixture(sc: &CostScalars) -> Result<(MixtureChoice, Rational)> {
    let (c1, c2) = (mixture_c1(sc), mixture_c2(sc));
    Ok(match prefer_c2(&c1, &c2)? {
        MixtureChoice::C1 => (MixtureChoice::C1, c1?.cost),
        MixtureChoice::C2 => (MixtureChoice::C2, c2?.cost),
    })
}

fn plan_class(share: ClassShare, alloc: Vec<Rational>) -> Result<CodeClass> {
    let MdsCode { k, r } = share.code;
    let cost = share.code.total_cost()?;
    let geometry = share.code.geometry()?;
    let kq = int(k as i64);
    let expected_total = &share.fraction * int(r as i64) / &kq;
    if sum(&alloc) != expected_total {
        return Err(Error::InvalidMixture(format!(
            "class ({k},{r}) allocations sum to {} instead of {expected_total}",
            sum(&alloc)
        )));
    }
    let cap = &share.fraction / &kq;
    if alloc.iter().any(|a| *a > cap) {
        return Err(Error::InvalidMixture(format!("class ({k},{r}) allocation exceeds cap {cap}")));
    }
    let partitions = solve_partition(&alloc, k, r)?;
    partitions.verify(&alloc)?;
    debug_assert_eq!(partitions.eta_total(), share.fraction);
    Ok(CodeClass { code: share.code, fraction: share.fraction, alloc, cost, geometry, partitions })
}
