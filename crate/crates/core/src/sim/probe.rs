//! Distribution probes for the privacy and security guarantees.
//!
//! A probe fixes a tiny geometry, varies one secret (the submodel index, the
//! update value or the stored plaintext) over a list of conditions, and
//! compares what each single database observes across conditions. The noise
//! space is enumerated exhaustively when it has at most `budget` points;
//! otherwise `samples` draws per condition feed a two-sample chi-square test
//! on the joint distribution of the first two observed coordinates.

use std::collections::HashMap;

use num::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};
use crate::ffield::{gen_constants, ConstantsPool, PrimeField};
use crate::pruw::{
    encode_subpacket, gen_read_queries, gen_write_updates, ClassGeometry, QueryNoise, StorageNoise,
    SubpacketPlain, UpdateNoise,
};
use crate::ratio::{Exact, Rational};

pub const DEFAULT_BUDGET: u64 = 1_000_000;
pub const DEFAULT_SAMPLES: u64 = 100_000;
pub const SIGNIFICANCE: f64 = 0.001;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ProbeMode {
    /// Conditions are submodel indices; a database sees its read queries and
    /// combined updates.
    Index,
    /// Conditions are update values; a database sees its read queries and
    /// combined updates.
    Update,
    /// Conditions are plaintext values; a database sees its stored share.
    Security,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProbeConfig {
    pub mode: ProbeMode,
    pub q: u64,
    pub submodels: usize,
    pub k: usize,
    pub r: usize,
    /// Secrets compared pairwise. Every parameter of the update or plaintext
    /// is set to the condition value.
    pub conditions: Vec<u64>,
    pub budget: u64,
    pub samples: u64,
    pub allow_sampling: bool,
    pub seed: u64,
}

impl ProbeConfig {
    /// Defaults: all submodel indices for the index probe, `{0, 3}` for the
    /// update probe and `{0, 1, q-1}` for the security probe.
    pub fn new(mode: ProbeMode, q: u64, submodels: usize, k: usize, r: usize) -> Self {
        let conditions = match mode {
            ProbeMode::Index => (0..submodels as u64).collect(),
            ProbeMode::Update => vec![0, 3 % q],
            ProbeMode::Security => vec![0, 1, q - 1],
        };
        Self {
            mode,
            q,
            submodels,
            k,
            r,
            conditions,
            budget: DEFAULT_BUDGET,
            samples: DEFAULT_SAMPLES,
            allow_sampling: true,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ProbeMethod {
    Enumeration { points: u64 },
    Sampling { samples: u64 },
}

/// One database's view under two conditions. `right: None` compares against
/// the uniform distribution over all possible views.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ViewComparison {
    pub database: usize,
    pub left: u64,
    pub right: Option<u64>,
    /// Exact total-variation distance (enumeration only).
    pub tv: Option<Exact>,
    pub chi_square: Option<f64>,
    pub degrees_of_freedom: Option<u64>,
    pub p_value: Option<f64>,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeReport {
    pub mode: ProbeMode,
    pub q: u64,
    pub submodels: usize,
    pub geometry: ClassGeometry,
    pub method: ProbeMethod,
    pub comparisons: Vec<ViewComparison>,
    pub max_tv: Option<Exact>,
    pub pass: bool,
}

struct Setup {
    field: PrimeField,
    geom: ClassGeometry,
    pool: ConstantsPool,
    m: usize,
}

impl Setup {
    fn noise_dim(&self, mode: ProbeMode) -> usize {
        match mode {
            ProbeMode::Index | ProbeMode::Update => QueryNoise::len_for(self.m, &self.geom) + self.geom.k,
            ProbeMode::Security => StorageNoise::len_for(self.m, &self.geom),
        }
    }

    /// What every database observes for one condition and one noise point.
    fn views(&self, mode: ProbeMode, condition: u64, noise: &[u64]) -> Result<Vec<Vec<u64>>> {
        let (f, g, m) = (&self.field, &self.geom, self.m);
        let grid = &self.pool.grids[0];
        let alphas = &self.pool.alphas;
        match mode {
            ProbeMode::Index | ProbeMode::Update => {
                let (theta, value) = match mode {
                    ProbeMode::Index => (condition as usize, 1),
                    _ => (0, condition),
                };
                let split = QueryNoise::len_for(m, g);
                let qn = QueryNoise::from_values(m, g, noise[..split].to_vec());
                let un = UpdateNoise::from_values(g, noise[split..].to_vec());
                let queries = gen_read_queries(f, g, grid, alphas, m, theta, &qn)?;
                let delta = vec![f.reduce(value); g.block()];
                let updates = gen_write_updates(f, g, grid, alphas, &delta, &un)?;
                Ok(queries
                    .into_iter()
                    .zip(updates)
                    .map(|(q, u)| q.slots.into_iter().flatten().chain(u).collect())
                    .collect())
            }
            ProbeMode::Security => {
                let plain = SubpacketPlain::new(m, g, vec![f.reduce(condition); m * g.block()]);
                let sn = StorageNoise::from_values(m, g, noise.to_vec());
                alphas.iter().map(|&a| encode_subpacket(f, g, grid, &plain, &sn, a)).collect()
            }
        }
    }
}

type Counts = HashMap<Vec<u64>, u64>;

/// Runs a probe. Fails with `BudgetExceeded` when the noise space is larger
/// than the budget and sampling is disabled.
pub fn privacy_probe(cfg: &ProbeConfig) -> Result<ProbeReport> {
    let field = PrimeField::new(cfg.q)?;
    let geom = ClassGeometry::new(cfg.k, cfg.r)?;
    if cfg.submodels == 0 {
        return Err(Error::InvalidConstraints("probe needs at least one submodel".into()));
    }
    if cfg.mode == ProbeMode::Index && cfg.conditions.iter().any(|&t| t as usize >= cfg.submodels) {
        return Err(Error::InvalidConstraints("index probe condition out of range".into()));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(cfg.seed);
    let pool = gen_constants(&field, geom.r, &[(geom.y, geom.k)], &mut rng)?;
    let setup = Setup { field, geom, pool, m: cfg.submodels };
    let dim = setup.noise_dim(cfg.mode);
    let points = (cfg.q as u128).checked_pow(dim as u32).unwrap_or(u128::MAX);

    let (method, comparisons) = if points <= cfg.budget as u128 {
        (ProbeMethod::Enumeration { points: points as u64 }, enumerate(cfg, &setup, dim, points as u64)?)
    } else if cfg.allow_sampling {
        (ProbeMethod::Sampling { samples: cfg.samples }, sample(cfg, &setup, dim, &mut rng)?)
    } else {
        return Err(Error::BudgetExceeded { points, budget: cfg.budget });
    };

    let max_tv = comparisons.iter().filter_map(|c| c.tv.as_ref().map(|t| t.0.clone())).max().map(Exact);
    let pass = comparisons.iter().all(|c| c.pass);
    Ok(ProbeReport {
        mode: cfg.mode,
        q: cfg.q,
        submodels: cfg.submodels,
        geometry: setup.geom,
        method,
        comparisons,
        max_tv,
        pass,
    })
}

fn pairs(n: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..n).flat_map(move |a| (a + 1..n).map(move |b| (a, b)))
}

fn enumerate(cfg: &ProbeConfig, setup: &Setup, dim: usize, points: u64) -> Result<Vec<ViewComparison>> {
    let dbs = setup.geom.r;
    let mut tables: Vec<Vec<Counts>> = Vec::with_capacity(cfg.conditions.len());
    let mut noise = vec![0u64; dim];
    for &cond in &cfg.conditions {
        let mut per_db = vec![Counts::new(); dbs];
        noise.iter_mut().for_each(|v| *v = 0);
        for _ in 0..points {
            for (db, view) in setup.views(cfg.mode, cond, &noise)?.into_iter().enumerate() {
                *per_db[db].entry(view).or_insert(0) += 1;
            }
            advance(&mut noise, cfg.q);
        }
        tables.push(per_db);
    }

    let mut out = Vec::new();
    for db in 0..dbs {
        for (a, b) in pairs(cfg.conditions.len()) {
            let tv = tv_between(&tables[a][db], &tables[b][db], points);
            out.push(exact_comparison(db, cfg.conditions[a], Some(cfg.conditions[b]), tv));
        }
        if cfg.mode == ProbeMode::Security {
            let outcomes = (cfg.q as u128).pow((setup.m * setup.geom.y) as u32);
            for (c, table) in tables.iter().enumerate() {
                let tv = tv_uniform(&table[db], points, outcomes);
                out.push(exact_comparison(db, cfg.conditions[c], None, tv));
            }
        }
    }
    Ok(out)
}

fn exact_comparison(database: usize, left: u64, right: Option<u64>, tv: Rational) -> ViewComparison {
    ViewComparison {
        database,
        left,
        right,
        pass: tv.is_zero(),
        tv: Some(Exact(tv)),
        chi_square: None,
        degrees_of_freedom: None,
        p_value: None,
    }
}

/// Odometer increment over `F_q^dim`.
fn advance(noise: &mut [u64], q: u64) {
    for v in noise.iter_mut() {
        *v += 1;
        if *v < q {
            return;
        }
        *v = 0;
    }
}

fn tv_between(a: &Counts, b: &Counts, total: u64) -> Rational {
    let mut diff: u64 = 0;
    for (k, &ca) in a {
        diff += ca.abs_diff(b.get(k).copied().unwrap_or(0));
    }
    for (k, &cb) in b {
        if !a.contains_key(k) {
            diff += cb;
        }
    }
    Rational::new(diff.into(), (2 * total).into())
}

fn tv_uniform(counts: &Counts, total: u64, outcomes: u128) -> Rational {
    let u = Rational::new(1.into(), outcomes.into());
    let t = num::BigInt::from(total);
    let mut acc = Rational::zero();
    for &c in counts.values() {
        let p = Rational::new(c.into(), t.clone());
        acc += if p > u { &p - &u } else { &u - &p };
    }
    let unseen = outcomes.saturating_sub(counts.len() as u128);
    acc += Rational::from_integer(unseen.into()) * &u;
    acc / Rational::from_integer(2.into())
}

fn sample(cfg: &ProbeConfig, setup: &Setup, dim: usize, rng: &mut ChaCha20Rng) -> Result<Vec<ViewComparison>> {
    let dbs = setup.geom.r;
    let mut tables: Vec<Vec<HashMap<(u64, u64), u64>>> = Vec::with_capacity(cfg.conditions.len());
    for &cond in &cfg.conditions {
        let mut per_db = vec![HashMap::new(); dbs];
        for _ in 0..cfg.samples {
            let noise: Vec<u64> = (0..dim).map(|_| rng.gen_range(0..cfg.q)).collect();
            for (db, view) in setup.views(cfg.mode, cond, &noise)?.into_iter().enumerate() {
                let key = (view[0], view.get(1).copied().unwrap_or(0));
                *per_db[db].entry(key).or_insert(0u64) += 1;
            }
        }
        tables.push(per_db);
    }
    let mut out = Vec::new();
    for db in 0..dbs {
        for (a, b) in pairs(cfg.conditions.len()) {
            let (stat, df) = homogeneity(&tables[a][db], &tables[b][db]);
            let p_value = if df == 0 { 1.0 } else { 1.0 - ChiSquared::new(df as f64).expect("df > 0").cdf(stat) };
            out.push(ViewComparison {
                database: db,
                left: cfg.conditions[a],
                right: Some(cfg.conditions[b]),
                tv: None,
                chi_square: Some(stat),
                degrees_of_freedom: Some(df),
                p_value: Some(p_value),
                pass: p_value > SIGNIFICANCE,
            });
        }
    }
    Ok(out)
}

/// Two-sample chi-square statistic and degrees of freedom over the union of
/// observed cells.
fn homogeneity(a: &HashMap<(u64, u64), u64>, b: &HashMap<(u64, u64), u64>) -> (f64, u64) {
    let na: u64 = a.values().sum();
    let nb: u64 = b.values().sum();
    let n = (na + nb) as f64;
    let mut cells: Vec<&(u64, u64)> = a.keys().chain(b.keys().filter(|k| !a.contains_key(k))).collect();
    cells.sort_unstable();
    let mut stat = 0.0;
    for key in &cells {
        let ca = a.get(key).copied().unwrap_or(0) as f64;
        let cb = b.get(key).copied().unwrap_or(0) as f64;
        let row = ca + cb;
        let ea = row * na as f64 / n;
        let eb = row * nb as f64 / n;
        stat += (ca - ea).powi(2) / ea + (cb - eb).powi(2) / eb;
    }
    (stat, cells.len().saturating_sub(1) as u64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num::One;

    #[test]
    fn odometer_covers_space() {
        let mut v = vec![0u64; 2];
        let mut seen = std::collections::HashSet::new();
        for _ in 0..9 {
            seen.insert(v.clone());
            advance(&mut v, 3);
        }
        assert_eq!(seen.len(), 9);
        assert_eq!(v, vec![0, 0]);
    }

    #[test]
    fn tv_of_disjoint_supports_is_one() {
        let a: Counts = [(vec![0], 2)].into_iter().collect();
        let b: Counts = [(vec![1], 2)].into_iter().collect();
        assert!(tv_between(&a, &b, 2).is_one());
        assert!(tv_between(&a, &a, 2).is_zero());
    }

    #[test]
    fn tv_uniform_examples() {
        let flat: Counts = (0..4).map(|i| (vec![i], 1)).collect();
        assert!(tv_uniform(&flat, 4, 4).is_zero());
        let point: Counts = [(vec![0], 4)].into_iter().collect();
        assert_eq!(tv_uniform(&point, 4, 4), Rational::new(3.into(), 4.into()));
    }

    #[test]
    fn index_probe_enumerates() {
        let report = privacy_probe(&ProbeConfig::new(ProbeMode::Index, 7, 2, 1, 4)).unwrap();
        assert_eq!(report.method, ProbeMethod::Enumeration { points: 343 });
        assert!(report.pass);
        assert!(report.max_tv.unwrap().0.is_zero());
    }

    #[test]
    fn budget_exceeded_without_sampling() {
        let mut cfg = ProbeConfig::new(ProbeMode::Index, 7, 2, 1, 4);
        cfg.budget = 100;
        cfg.allow_sampling = false;
        assert_eq!(privacy_probe(&cfg).unwrap_err(), Error::BudgetExceeded { points: 343, budget: 100 });
    }

    #[test]
    fn leaky_view_is_detected() {
        // Zero update noise would expose the update value.
        let setup = Setup {
            field: PrimeField::new(7).unwrap(),
            geom: ClassGeometry::new(1, 4).unwrap(),
            pool: gen_constants(&PrimeField::new(7).unwrap(), 4, &[(1, 1)], &mut ChaCha20Rng::seed_from_u64(0))
                .unwrap(),
            m: 1,
        };
        let zero = vec![0u64; setup.noise_dim(ProbeMode::Update)];
        let a = setup.views(ProbeMode::Update, 0, &zero).unwrap();
        let b = setup.views(ProbeMode::Update, 3, &zero).unwrap();
        assert_ne!(a, b);
    }
}
