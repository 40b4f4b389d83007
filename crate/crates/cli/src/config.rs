//! Scenario configuration files.
//!
//! ```json
//! {
//!   "mu": ["0.37", "0.37", "0.35"],
//!   "M": 4,
//!   "L": 70200,
//!   "q": 2147483647,
//!   "seed": 7,
//!   "pad": false,
//!   "k": "2.7"
//! }
//! ```
//!
//! Fractions may be decimal strings or JSON numbers; both are read as exact
//! decimals. `q`, `seed`, `pad`, `k`, `probe` and `probe_q` are optional.

use std::path::Path;

use anyhow::{Context, Result};
use num::{One, Signed};
use serde::{Deserialize, Serialize};

use pruw_core::ffield::{PrimeField, MERSENNE_31};
use pruw_core::planner::StorageProfile;
use pruw_core::ratio::{exact_vec, format_exact, parse_decimal, Exact, Rational};

use crate::exit::invalid;

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum Decimal {
    Text(String),
    Number(serde_json::Number),
}

impl Decimal {
    fn text(&self) -> String {
        match self {
            Decimal::Text(s) => s.clone(),
            Decimal::Number(n) => n.to_string(),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    mu: Vec<Decimal>,
    #[serde(rename = "M")]
    m: u64,
    #[serde(rename = "L")]
    l: u64,
    q: Option<u64>,
    seed: Option<u64>,
    #[serde(default)]
    pad: bool,
    k: Option<Decimal>,
    #[serde(default)]
    probe: bool,
    probe_q: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScenarioConfig {
    pub mu: Vec<Rational>,
    pub submodels: u64,
    pub length: u64,
    pub q: u64,
    pub seed: u64,
    pub pad: bool,
    /// Coding parameter override; `1/max mu` when absent.
    pub k: Option<Rational>,
    pub probe: bool,
    pub probe_q: Option<u64>,
    /// Defaults that were filled in, for the report.
    pub notes: Vec<String>,
}

/// Echo of a configuration in reports.
#[derive(Debug, Serialize)]
pub struct ConfigEcho {
    pub mu: Vec<Exact>,
    #[serde(rename = "M")]
    pub m: u64,
    #[serde(rename = "L")]
    pub l: u64,
    pub q: u64,
    pub seed: u64,
    pub pad: bool,
    pub k: Option<String>,
}

impl ScenarioConfig {
    pub fn profile(&self) -> Result<StorageProfile> {
        let profile = match &self.k {
            Some(k) => StorageProfile::with_coding_parameter(self.mu.clone(), k.clone()),
            None => StorageProfile::new(self.mu.clone()),
        };
        Ok(profile?)
    }

    pub fn echo(&self) -> ConfigEcho {
        ConfigEcho {
            mu: exact_vec(&self.mu),
            m: self.submodels,
            l: self.length,
            q: self.q,
            seed: self.seed,
            pad: self.pad,
            k: self.k.as_ref().map(format_exact),
        }
    }
}

pub fn load_config(path: &Path) -> Result<ScenarioConfig> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_config(&text).with_context(|| format!("in {}", path.display()))
}

pub fn parse_config(text: &str) -> Result<ScenarioConfig> {
    let raw: RawConfig = serde_json::from_str(text)?;
    let mut notes = Vec::new();

    if raw.mu.is_empty() {
        return Err(invalid("mu: at least one database is required"));
    }
    let mut mu = Vec::with_capacity(raw.mu.len());
    for (n, d) in raw.mu.iter().enumerate() {
        let text = d.text();
        let v = parse_decimal(&text).map_err(|_| invalid(format!("mu[{n}]: `{text}` is not a decimal number")))?;
        if !v.is_positive() || v > Rational::one() {
            return Err(invalid(format!("mu[{n}]: {text} is outside (0, 1]")));
        }
        mu.push(v);
    }
    if raw.m < 2 {
        return Err(invalid(format!("M: need at least 2 submodels, got {}", raw.m)));
    }
    if raw.l == 0 {
        return Err(invalid("L: submodel length must be positive"));
    }
    let q = match raw.q {
        Some(q) => q,
        None => {
            notes.push(format!("q not given; using the default modulus {MERSENNE_31}"));
            MERSENNE_31
        }
    };
    PrimeField::new(q).map_err(|_| invalid(format!("q: {q} is not a prime below 2^32")))?;
    if let Some(pq) = raw.probe_q {
        PrimeField::new(pq).map_err(|_| invalid(format!("probe_q: {pq} is not a prime below 2^32")))?;
    }
    let seed = match raw.seed {
        Some(s) => s,
        None => {
            notes.push("seed not given; using 0".into());
            0
        }
    };
    let k = match &raw.k {
        Some(d) => {
            let text = d.text();
            let v = parse_decimal(&text).map_err(|_| invalid(format!("k: `{text}` is not a decimal number")))?;
            if v < Rational::one() {
                return Err(invalid(format!("k: {text} must be at least 1")));
            }
            Some(v)
        }
        None => None,
    };
    Ok(ScenarioConfig {
        mu,
        submodels: raw.m,
        length: raw.l,
        q,
        seed,
        pad: raw.pad,
        k,
        probe: raw.probe,
        probe_q: raw.probe_q,
        notes,
    })
}
