//! The two candidate code mixtures and their costs.
//!
//! The floor-only mixture stores `ceil(s)-s` and `s-floor(s)` of every
//! submodel under `(floor k, floor s)` and `(floor k, ceil s)` codes. The
//! four-code mixture splits every submodel into the fractions
//! `alpha*beta`, `alpha*(1-beta)`, `(1-alpha)*delta`, `(1-alpha)*(1-delta)`
//! stored under `(floor k, floor r)`, `(floor k, ceil r)`, `(ceil k, floor r)`
//! and `(ceil k, ceil r)` respectively.

use num::{One, Zero};
use serde::Serialize;

use super::cost::MdsCode;
use super::CostScalars;
use crate::error::Result;
use crate::ratio::{int, serialize_rational, Rational};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ClassShare {
    pub code: MdsCode,
    #[serde(serialize_with = "serialize_rational")]
    pub fraction: Rational,
}

impl ClassShare {
    fn new(k: u64, r: u64, fraction: Rational) -> Self {
        Self { code: MdsCode::new(k, r), fraction }
    }
}

/// Sum of `fraction * C_T(code)` over the classes with nonzero fraction.
fn mixture_cost(classes: &[ClassShare]) -> Result<Rational> {
    classes
        .iter()
        .filter(|c| !c.fraction.is_zero())
        .try_fold(Rational::zero(), |acc, c| Ok(acc + &c.fraction * c.code.total_cost()?))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct C1Mixture {
    pub cost: Rational,
    /// Fraction stored under the `(floor k, floor s)` code.
    pub beta: Rational,
    /// Always two slots, in the order `(floor k, floor s)`, `(floor k, ceil s)`.
    pub classes: Vec<ClassShare>,
}

/// Floor-only mixture. When `s` is an integer the whole model goes to the
/// second slot, which is then the single `(floor k, s)` code.
pub fn mixture_c1(scalars: &CostScalars) -> Result<C1Mixture> {
    let beta = scalars.s.ceil() - &scalars.s;
    let kf = scalars.k_floor();
    let classes = vec![
        ClassShare::new(kf, scalars.s_floor(), beta.clone()),
        ClassShare::new(kf, scalars.s_ceil(), Rational::one() - &beta),
    ];
    let cost = mixture_cost(&classes)?;
    Ok(C1Mixture { cost, beta, classes })
}

/// Which case of the weight rules produced a [`MixtureWeights`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum C2Branch {
    /// `k` is an integer: the floor and ceiling codes coincide.
    IntegerK,
    /// Odd parity, `r - floor r <= k - floor k`.
    OddFractionBelow,
    /// Odd parity, `r - floor r > k - floor k`, `s <= floor r`.
    OddFractionAboveLowS,
    /// Odd parity, `r - floor r > k - floor k`, `s > floor r`.
    OddFractionAboveHighS,
    /// Even parity, `r - floor r < ceil k - k`.
    EvenFractionBelow,
    /// Even parity, `r - floor r >= ceil k - k`.
    EvenFractionAbove,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MixtureWeights {
    #[serde(serialize_with = "serialize_rational")]
    pub alpha: Rational,
    #[serde(serialize_with = "serialize_rational")]
    pub beta: Rational,
    #[serde(serialize_with = "serialize_rational")]
    pub delta: Rational,
    pub branch: C2Branch,
}

impl MixtureWeights {
    /// Table fractions in slot order.
    pub fn fractions(&self) -> [Rational; 4] {
        let one = Rational::one();
        [
            &self.alpha * &self.beta,
            &self.alpha * (&one - &self.beta),
            (&one - &self.alpha) * &self.delta,
            (&one - &self.alpha) * (&one - &self.delta),
        ]
    }
}

/// Weights `alpha`, `beta`, `delta` of the four-code mixture.
///
/// For integer `k` the ceiling codes coincide with the floor codes and the
/// mixture collapses onto `(k, floor r)` and `(k, ceil r)` with the same
/// split as the floor-only mixture at `s = r`.
pub fn c2_weights(sc: &CostScalars) -> MixtureWeights {
    let one = Rational::one();
    let kf = int(sc.k_floor() as i64);
    let kc = int(sc.k_ceil() as i64);
    let rf = int(sc.r_floor() as i64);
    let rc = int(sc.r_ceil() as i64);
    let r_frac = &sc.r - &rf;
    let k_frac = &sc.k - &kf;
    let k_gap = &kc - &sc.k;

    if k_frac.is_zero() {
        let beta = if r_frac.is_zero() { one.clone() } else { &rc - &sc.r };
        return MixtureWeights { alpha: one.clone(), beta, delta: one, branch: C2Branch::IntegerK };
    }

    let base_alpha = &kf / &sc.k * &k_gap;
    let odd = (sc.r_floor() - sc.k_floor()) % 2 == 1;
    if odd {
        if r_frac <= k_frac {
            let delta = &one - &r_frac / &k_frac;
            MixtureWeights { alpha: base_alpha, beta: one, delta, branch: C2Branch::OddFractionBelow }
        } else if sc.s <= rf {
            let alpha = &kf * (&sc.p * &kc - &rc) / (&kc * &rf - &kf * &rc);
            MixtureWeights { alpha, beta: one, delta: Rational::zero(), branch: C2Branch::OddFractionAboveLowS }
        } else {
            let beta = (&rc - &sc.r) / &k_gap;
            MixtureWeights {
                alpha: base_alpha,
                beta,
                delta: Rational::zero(),
                branch: C2Branch::OddFractionAboveHighS,
            }
        }
    } else if r_frac < k_gap {
        let beta = &one - &r_frac / &k_gap;
        MixtureWeights { alpha: base_alpha, beta, delta: one, branch: C2Branch::EvenFractionBelow }
    } else {
        let alpha = &kf * (&sc.p * &kc - &rf) / (&kc * &rc - &kf * &rf);
        MixtureWeights { alpha, beta: Rational::zero(), delta: one, branch: C2Branch::EvenFractionAbove }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct C2Mixture {
    pub cost: Rational,
    pub weights: MixtureWeights,
    /// Always four slots in table order.
    pub classes: Vec<ClassShare>,
}

/// Four-code mixture with the weights of [`c2_weights`]. Fails with
/// `InfeasibleCode` if any class with nonzero fraction is infeasible.
pub fn mixture_c2(sc: &CostScalars) -> Result<C2Mixture> {
    let weights = c2_weights(sc);
    let (kf, kc, rf, rc) = (sc.k_floor(), sc.k_ceil(), sc.r_floor(), sc.r_ceil());
    let [f1, f2, f3, f4] = weights.fractions();
    let classes = vec![
        ClassShare::new(kf, rf, f1),
        ClassShare::new(kf, rc, f2),
        ClassShare::new(kc, rf, f3),
        ClassShare::new(kc, rc, f4),
    ];
    let cost = mixture_cost(&classes)?;
    Ok(C2Mixture { cost, weights, classes })
}
