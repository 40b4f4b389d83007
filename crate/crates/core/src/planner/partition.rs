//! Replica-subset partitioning of one code class.
//!
//! A class with allocation vector `alloc` is split into partitions
//! `(b_i, eta_i)`: an `eta_i` fraction of every submodel is coded and placed on
//! the `R` databases in `b_i`, so that `(1/K) sum eta_i b_i = alloc`.

use num::{Signed, Zero};
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::ratio::{int, serialize_rational, sum, Rational};

/// `alloc(n) <= sum(alloc) / R` for every `n`.
pub fn check_condition(alloc: &[Rational], r: u64) -> bool {
    if r == 0 {
        return false;
    }
    let bound = sum(alloc) / int(r as i64);
    alloc.iter().all(|a| *a <= bound)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PartitionEntry {
    /// Database indices holding this partition, ascending.
    #[serde(rename = "subset", serialize_with = "serialize_members")]
    pub members: Vec<usize>,
    #[serde(serialize_with = "serialize_rational")]
    pub eta: Rational,
    #[serde(skip)]
    n: usize,
}

fn serialize_members<S: Serializer>(members: &[usize], s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&members.iter().map(|m| m.to_string()).collect::<Vec<_>>().join(","))
}

impl PartitionEntry {
    pub fn new(n: usize, mut members: Vec<usize>, eta: Rational) -> Self {
        members.sort_unstable();
        Self { members, eta, n }
    }

    /// Subset as an `N`-character string of `0`/`1`, database 0 first.
    pub fn mask(&self) -> String {
        let mut bits = vec!['0'; self.n];
        for &m in &self.members {
            bits[m] = '1';
        }
        bits.into_iter().collect()
    }

    pub fn contains(&self, db: usize) -> bool {
        self.members.binary_search(&db).is_ok()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PartitionTable {
    #[serde(rename = "K")]
    pub k: u64,
    #[serde(rename = "R")]
    pub r: u64,
    pub entries: Vec<PartitionEntry>,
}

impl PartitionTable {
    pub fn eta_total(&self) -> Rational {
        self.entries.iter().fold(Rational::zero(), |acc, e| acc + &e.eta)
    }

    /// `(1/K) sum eta_i b_i` over `n` databases.
    pub fn implied_alloc(&self, n: usize) -> Vec<Rational> {
        let mut out = vec![Rational::zero(); n];
        let k = int(self.k as i64);
        for e in &self.entries {
            let share = &e.eta / &k;
            for &m in &e.members {
                out[m] += &share;
            }
        }
        out
    }

    /// Checks the exact-fill and replication invariants against `alloc`.
    pub fn verify(&self, alloc: &[Rational]) -> Result<()> {
        for e in &self.entries {
            if e.members.len() as u64 != self.r {
                return Err(Error::InfeasiblePartition(format!(
                    "subset {} has {} members, expected {}",
                    e.mask(),
                    e.members.len(),
                    self.r
                )));
            }
            if !e.eta.is_positive() {
                return Err(Error::InfeasiblePartition(format!("eta {} is not positive", e.eta)));
            }
        }
        if self.implied_alloc(alloc.len()) != alloc {
            return Err(Error::InfeasiblePartition("partitions do not reproduce the allocation".into()));
        }
        Ok(())
    }
}

/// Water-filling partition solver.
///
/// Each round takes the `R` databases with the most remaining space (lowest
/// index on ties) and assigns them `x = min(c_R, T/R - c_{R+1})`, where
/// `c_R`, `c_{R+1}` are the `R`-th and `(R+1)`-th largest remaining spaces
/// and `T` the remaining total. The condition `c(n) <= T/R` is preserved, and
/// every round either empties a database or makes one more database tight,
/// so at most `N` rounds are needed.
pub fn solve_partition(alloc: &[Rational], k: u64, r: u64) -> Result<PartitionTable> {
    let n = alloc.len();
    if alloc.iter().any(Signed::is_negative) {
        return Err(Error::InfeasiblePartition("negative allocation".into()));
    }
    let mut table = PartitionTable { k, r, entries: Vec::new() };
    if alloc.iter().all(Zero::is_zero) {
        return Ok(table);
    }
    if r == 0 || r as usize > n {
        return Err(Error::InfeasiblePartition(format!("cannot replicate on {r} of {n} databases")));
    }
    if !check_condition(alloc, r) {
        return Err(Error::InfeasiblePartition(format!(
            "some allocation exceeds sum/R with R = {r}"
        )));
    }
    let r_us = r as usize;
    let r_q = int(r as i64);
    let k_q = int(k as i64);
    let mut rem: Vec<Rational> = alloc.to_vec();
    let mut total = sum(&rem);
    while total.is_positive() {
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| rem[b].cmp(&rem[a]).then(a.cmp(&b)));
        let chosen = &order[..r_us];
        let c_r = rem[chosen[r_us - 1]].clone();
        let next = order.get(r_us).map_or_else(Rational::zero, |&i| rem[i].clone());
        let x = std::cmp::min(c_r, &total / &r_q - next);
        if !x.is_positive() {
            return Err(Error::InfeasiblePartition("water-filling stalled".into()));
        }
        for &i in chosen {
            rem[i] -= &x;
        }
        total -= &x * &r_q;
        table.entries.push(PartitionEntry::new(n, chosen.to_vec(), &x * &k_q));
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ratio::{rat, to_f64};

    #[test]
    fn condition_examples() {
        assert!(check_condition(&vec![rat(1, 2); 4], 4));
        assert!(!check_condition(&[rat(9, 10), rat(1, 10), rat(1, 10)], 2));
        let mut mu = vec![rat(37, 100); 5];
        mu.extend(vec![rat(35, 100); 7]);
        let k = rat(100, 37);
        let r = (&k * sum(&mu)).floor();
        assert!(check_condition(&mu, num::ToPrimitive::to_u64(&r.to_integer()).unwrap()));
    }

    #[test]
    fn homogeneous_single_partition() {
        let table = solve_partition(&vec![rat(1, 4); 8], 4, 8).unwrap();
        assert_eq!(table.entries.len(), 1);
        assert_eq!(table.entries[0].eta, int(1));
        assert_eq!(table.entries[0].mask(), "11111111");
    }

    #[test]
    fn leave_one_out_structure() {
        // Five larger and seven smaller shares, R = N - 1.
        let mut alloc = vec![rat(11, 100); 5];
        alloc.extend(vec![rat(33, 350); 7]);
        let table = solve_partition(&alloc, 2, 11).unwrap();
        table.verify(&alloc).unwrap();
        assert!(table.entries.iter().all(|e| e.members.len() == 11));
        let total = table.eta_total();
        assert_eq!(total, rat(2, 11) * sum(&alloc));
        assert!(to_f64(&total) > 0.0);
    }

    #[test]
    fn rejects_violating_allocation() {
        let err = solve_partition(&[rat(9, 10), rat(1, 10), rat(1, 10)], 1, 2).unwrap_err();
        assert!(matches!(err, Error::InfeasiblePartition(_)));
    }

    #[test]
    fn empty_allocation_gives_empty_table() {
        let table = solve_partition(&vec![Rational::zero(); 3], 1, 2).unwrap();
        assert!(table.entries.is_empty());
    }
}
