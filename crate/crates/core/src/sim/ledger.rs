//! Symbol accounting for sessions.

use num::{Signed, Zero};
use serde::Serialize;

use super::ClassLayout;
use crate::planner::{MdsCode, StoragePlan};
use crate::ratio::{int, serialize_rational, Rational};

/// Symbols exchanged with the holders of one code class.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ClassUsage {
    pub code: MdsCode,
    /// Parameters of each submodel stored under this class.
    pub parameters: u64,
    /// Answer symbols downloaded.
    pub downloaded: u64,
    /// Combined-update symbols uploaded.
    pub uploaded: u64,
    /// Read-query symbols uploaded. Not part of the writing cost.
    pub query_uploaded: u64,
}

/// Per-session counts. Costs are normalized by the submodel length.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SessionLedger {
    pub length: u64,
    pub classes: Vec<ClassUsage>,
}

impl SessionLedger {
    pub(super) fn new(plan: &StoragePlan, layout: &[ClassLayout]) -> Self {
        let classes = plan
            .classes
            .iter()
            .zip(layout)
            .map(|(c, l)| ClassUsage {
                code: c.code,
                parameters: l.parameters() as u64,
                downloaded: 0,
                uploaded: 0,
                query_uploaded: 0,
            })
            .collect();
        Self { length: plan.length, classes }
    }

    pub fn downloaded(&self) -> u64 {
        self.classes.iter().map(|c| c.downloaded).sum()
    }

    pub fn uploaded(&self) -> u64 {
        self.classes.iter().map(|c| c.uploaded).sum()
    }

    pub fn query_uploaded(&self) -> u64 {
        self.classes.iter().map(|c| c.query_uploaded).sum()
    }

    pub fn reading_cost(&self) -> Rational {
        Rational::new(self.downloaded().into(), self.length.into())
    }

    pub fn writing_cost(&self) -> Rational {
        Rational::new(self.uploaded().into(), self.length.into())
    }

    pub fn total_cost(&self) -> Rational {
        self.reading_cost() + self.writing_cost()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ClassCost {
    pub code: MdsCode,
    /// Downloads per parameter of this class.
    #[serde(serialize_with = "serialize_rational")]
    pub reading: Rational,
    #[serde(serialize_with = "serialize_rational")]
    pub writing: Rational,
    #[serde(serialize_with = "serialize_rational")]
    pub total: Rational,
    /// Closed-form reading cost `2R'/(R'-K-1)`.
    #[serde(serialize_with = "serialize_rational")]
    pub expected_reading: Rational,
    /// Closed-form writing cost `2R/(R'-K-1)`.
    #[serde(serialize_with = "serialize_rational")]
    pub expected_writing: Rational,
    pub exact: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CostReport {
    pub classes: Vec<ClassCost>,
    #[serde(serialize_with = "serialize_rational")]
    pub reading: Rational,
    #[serde(serialize_with = "serialize_rational")]
    pub writing: Rational,
    #[serde(serialize_with = "serialize_rational")]
    pub total: Rational,
    /// `sum fraction * C_T(class)` from the plan.
    #[serde(serialize_with = "serialize_rational")]
    pub theoretical: Rational,
    /// `2 * max(y * K) / L`.
    #[serde(serialize_with = "serialize_rational")]
    pub tolerance: Rational,
    pub query_upload: u64,
    pub within_tolerance: bool,
}

/// Normalized costs of a session with a write phase, per class and overall,
/// compared against the closed forms and the plan's mixture cost.
pub fn measure_costs(ledger: &SessionLedger, plan: &StoragePlan) -> CostReport {
    let classes: Vec<ClassCost> = ledger
        .classes
        .iter()
        .zip(&plan.classes)
        .map(|(u, c)| {
            let g = c.geometry;
            let span = int((g.r_read - g.k - 1) as i64);
            let expected_reading = int(2 * g.r_read as i64) / &span;
            let expected_writing = int(2 * g.r as i64) / &span;
            let (reading, writing) = if u.parameters == 0 {
                (Rational::zero(), Rational::zero())
            } else {
                (
                    Rational::new(u.downloaded.into(), u.parameters.into()),
                    Rational::new(u.uploaded.into(), u.parameters.into()),
                )
            };
            let exact = reading == expected_reading && writing == expected_writing;
            ClassCost {
                code: u.code,
                total: &reading + &writing,
                reading,
                writing,
                expected_reading,
                expected_writing,
                exact,
            }
        })
        .collect();
    let block = plan.classes.iter().map(|c| c.geometry.block()).max().unwrap_or(0);
    let tolerance = Rational::new((2 * block as u64).into(), ledger.length.into());
    let total = ledger.total_cost();
    let theoretical = plan.theoretical_cost().clone();
    let within_tolerance = (&total - &theoretical).abs() <= &tolerance * &theoretical;
    CostReport {
        classes,
        reading: ledger.reading_cost(),
        writing: ledger.writing_cost(),
        total,
        theoretical,
        tolerance,
        query_upload: ledger.query_uploaded(),
        within_tolerance,
    }
}
