//! Per-database space allocations for the code classes.
//!
//! Every allocation step is the same two-way split: each database's share
//! `x(n)` is divided into `a(n) <= cap_a` and `b(n) <= cap_b` so that the
//! `a` parts sum to a prescribed total. With `m = [x - cap_b]+` and
//! `h = [x - cap_a]+` the smallest admissible `a` and `b`, the split is
//! `a = m + (x - m - h) * gamma` where `gamma` fixes the total.

use num::{One, Signed, Zero};
use serde::Serialize;

use super::{serialize_rational_vec, StorageProfile};
use crate::error::{Error, Result};
use crate::ratio::{in_unit_interval, int, pos, serialize_rational, sum, Rational};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SplitTrace {
    #[serde(serialize_with = "serialize_rational_vec")]
    pub m: Vec<Rational>,
    #[serde(serialize_with = "serialize_rational_vec")]
    pub h: Vec<Rational>,
    #[serde(serialize_with = "serialize_rational")]
    pub gamma: Rational,
}

/// Intermediates of the allocation formulas. The floor-only mixture fills
/// `tilde`; the four-code mixture fills `plain`, `hat` and `bar`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct AllocationTrace {
    pub plain: Option<SplitTrace>,
    pub hat: Option<SplitTrace>,
    pub bar: Option<SplitTrace>,
    pub tilde: Option<SplitTrace>,
}

struct Split {
    a: Vec<Rational>,
    b: Vec<Rational>,
    trace: SplitTrace,
}

fn split(x: &[Rational], cap_a: &Rational, cap_b: &Rational, target_a: &Rational) -> Result<Split> {
    for (n, v) in x.iter().enumerate() {
        if *v > cap_a + cap_b {
            return Err(Error::InvalidMixture(format!(
                "share {v} of database {n} exceeds the combined caps {}",
                cap_a + cap_b
            )));
        }
    }
    let m: Vec<Rational> = x.iter().map(|v| pos(v - cap_b)).collect();
    let h: Vec<Rational> = x.iter().map(|v| pos(v - cap_a)).collect();
    let (sm, sh) = (sum(&m), sum(&h));
    let num = target_a - &sm;
    let den = sum(x) - &sm - &sh;
    let gamma = if den.is_zero() {
        if !num.is_zero() {
            return Err(Error::InvalidMixture(format!(
                "split target {target_a} unreachable: shares are pinned at {sm}"
            )));
        }
        Rational::zero()
    } else {
        num / den
    };
    if !in_unit_interval(&gamma) {
        return Err(Error::InvalidMixture(format!(
            "split ratio {gamma} outside [0, 1] for target {target_a}"
        )));
    }
    let one = Rational::one();
    let mut a = Vec::with_capacity(x.len());
    let mut b = Vec::with_capacity(x.len());
    for ((v, mi), hi) in x.iter().zip(&m).zip(&h) {
        let free = v - mi - hi;
        a.push(mi + &free * &gamma);
        b.push(hi + &free * (&one - &gamma));
    }
    Ok(Split { a, b, trace: SplitTrace { m, h, gamma } })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TwoClassAlloc {
    /// Fraction stored under `(floor k, floor s)`, i.e. `ceil(s) - s`.
    pub beta: Rational,
    pub hat1: Vec<Rational>,
    pub hat2: Vec<Rational>,
    pub trace: AllocationTrace,
}

/// Allocations for the floor-only mixture: `hat1` backs `(floor k, floor s)`
/// and `hat2` backs `(floor k, ceil s)`.
pub fn two_class_alloc(profile: &StorageProfile) -> Result<TwoClassAlloc> {
    let sc = profile.scalars();
    let kf = int(sc.k_floor() as i64);
    let beta = sc.s.ceil() - &sc.s;
    let one = Rational::one();
    let cap1 = &beta / &kf;
    let cap2 = (&one - &beta) / &kf;
    let target = &beta * int(sc.s_floor() as i64) / &kf;
    let sp = split(profile.mu(), &cap1, &cap2, &target)?;
    Ok(TwoClassAlloc {
        beta,
        hat1: sp.a,
        hat2: sp.b,
        trace: AllocationTrace { tilde: Some(sp.trace), ..Default::default() },
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FourClassAlloc {
    pub hat1: Vec<Rational>,
    pub hat2: Vec<Rational>,
    pub bar1: Vec<Rational>,
    pub bar2: Vec<Rational>,
    pub trace: AllocationTrace,
}

/// Allocations for the four-code mixture with `alpha < 1`.
///
/// The `floor k` block receives `alpha/floor(k) * (beta floor r + (1-beta) ceil r)`
/// in total, which reduces to `alpha/floor(k) * (ceil r - beta)` whenever `r`
/// is not an integer.
pub fn four_class_alloc(
    profile: &StorageProfile,
    alpha: &Rational,
    beta: &Rational,
    delta: &Rational,
) -> Result<FourClassAlloc> {
    let sc = profile.scalars();
    let one = Rational::one();
    let kf = int(sc.k_floor() as i64);
    let kc = int(sc.k_ceil() as i64);
    let rf = int(sc.r_floor() as i64);
    let rc = int(sc.r_ceil() as i64);
    let r_frac = &sc.r - &rf;

    if kf == kc {
        return Err(Error::InvalidMixture("integer k has no ceiling codes".into()));
    }
    if alpha >= &one || alpha.is_negative() {
        return Err(Error::InvalidMixture(format!("alpha = {alpha} must lie in [0, 1)")));
    }
    if !in_unit_interval(beta) || !in_unit_interval(delta) {
        return Err(Error::InvalidMixture(format!(
            "beta = {beta}, delta = {delta} must lie in [0, 1]"
        )));
    }
    let alpha_min = &kf / &sc.k * (&kc - &sc.k);
    if alpha < &alpha_min {
        return Err(Error::InvalidMixture(format!("alpha = {alpha} below {alpha_min}")));
    }
    if alpha.is_positive() {
        let beta_min = pos(&one - &kf / (&sc.k * alpha) * &r_frac);
        if beta < &beta_min {
            return Err(Error::InvalidMixture(format!("beta = {beta} below {beta_min}")));
        }
    }
    let delta_min = pos(&one - &kc / (&sc.k * (&one - alpha)) * &r_frac);
    if delta < &delta_min {
        return Err(Error::InvalidMixture(format!("delta = {delta} below {delta_min}")));
    }

    let block_total = |w: &Rational| w * &rf + (&one - w) * &rc;
    let not_alpha = &one - alpha;

    let top = split(
        profile.mu(),
        &(alpha / &kf),
        &(&not_alpha / &kc),
        &(alpha / &kf * block_total(beta)),
    )?;
    let hat = split(
        &top.a,
        &(alpha * beta / &kf),
        &(alpha * (&one - beta) / &kf),
        &(alpha * beta * &rf / &kf),
    )?;
    let bar = split(
        &top.b,
        &(&not_alpha * delta / &kc),
        &(&not_alpha * (&one - delta) / &kc),
        &(&not_alpha * delta * &rf / &kc),
    )?;
    Ok(FourClassAlloc {
        hat1: hat.a,
        hat2: hat.b,
        bar1: bar.a,
        bar2: bar.b,
        trace: AllocationTrace {
            plain: Some(top.trace),
            hat: Some(hat.trace),
            bar: Some(bar.trace),
            tilde: None,
        },
    })
}
