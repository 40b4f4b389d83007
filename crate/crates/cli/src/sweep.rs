//! `pruw sweep` and `pruw curve`: cost tables over grids of scalars.

use std::io::Write;

use anyhow::Result;
use num::{BigInt, Signed, ToPrimitive, Zero};

use pruw_core::planner::{c2_weights, choose_mixture, mixture_c1, mixture_c2, total_cost, CostScalars, MixtureChoice};
use pruw_core::ratio::{format_decimal, parse_decimal, Rational};

use crate::exit::invalid;

/// Refuse grids larger than this many points per axis.
const MAX_POINTS: u64 = 1_000_000;

pub const SWEEP_HEADER: [&str; 10] = ["k", "p", "r", "s", "C1", "C2", "chosen", "alpha", "beta", "delta"];
pub const CURVE_HEADER: [&str; 3] = ["a", "b", "C_T"];

/// Inclusive arithmetic range `start:end:step` over exact decimals. A single
/// value stands for itself; `start:end` steps by one. `start > end` is empty.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Range {
    pub start: Rational,
    pub end: Rational,
    pub step: Rational,
}

impl Range {
    pub fn parse(name: &str, text: &str) -> Result<Self> {
        let parts: Vec<&str> = text.split(':').collect();
        let num = |s: &str| parse_decimal(s).map_err(|_| invalid(format!("{name}: `{s}` is not a decimal number")));
        let (start, end, step) = match parts.as_slice() {
            [a] => (num(a)?, num(a)?, Rational::from_integer(1.into())),
            [a, b] => (num(a)?, num(b)?, Rational::from_integer(1.into())),
            [a, b, s] => (num(a)?, num(b)?, num(s)?),
            _ => return Err(invalid(format!("{name}: expected start:end:step, got `{text}`"))),
        };
        if !step.is_positive() {
            return Err(invalid(format!("{name}: step must be positive")));
        }
        let range = Self { start, end, step };
        if range.len() > MAX_POINTS {
            return Err(invalid(format!("{name}: more than {MAX_POINTS} points")));
        }
        Ok(range)
    }

    pub fn len(&self) -> u64 {
        if self.start > self.end {
            return 0;
        }
        let n = ((&self.end - &self.start) / &self.step).floor().to_integer() + BigInt::from(1);
        n.to_u64().unwrap_or(u64::MAX)
    }

    pub fn values(&self) -> Vec<Rational> {
        (0..self.len()).map(|i| &self.start + &self.step * Rational::from_integer(i.into())).collect()
    }
}

/// Which axis the first range describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FirstAxis {
    K,
    /// Largest storage fraction; `k = 1/mu`.
    MaxMu,
}

fn dec(x: &Rational) -> String {
    format_decimal(x, 6)
}

/// One CSV row; cost cells are empty where the mixture is infeasible.
pub fn sweep_row(k: &Rational, p: &Rational) -> [String; 10] {
    let r = k * p;
    let s = k.floor() * p;
    let mut row = [dec(k), dec(p), dec(&r), dec(&s), String::new(), String::new(), String::new(), String::new(), String::new(), String::new()];
    let Ok(sc) = CostScalars::new(k.clone(), p.clone()) else {
        return row;
    };
    if let Ok(m) = mixture_c1(&sc) {
        row[4] = dec(&m.cost);
    }
    if let Ok(m) = mixture_c2(&sc) {
        row[5] = dec(&m.cost);
    }
    if let Ok((choice, _)) = choose_mixture(&sc) {
        row[6] = match choice {
            MixtureChoice::C1 => "C1",
            MixtureChoice::C2 => "C2",
        }
        .into();
    }
    let w = c2_weights(&sc);
    row[7] = dec(&w.alpha);
    row[8] = dec(&w.beta);
    row[9] = dec(&w.delta);
    row
}

pub fn write_sweep<W: Write>(out: W, first: &Range, axis: FirstAxis, p: &Range) -> Result<u64> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(SWEEP_HEADER)?;
    let mut rows = 0;
    let ps = p.values();
    for x in first.values() {
        let k = match axis {
            FirstAxis::K => x,
            FirstAxis::MaxMu if x.is_zero() => return Err(invalid("mu-range: 0 has no coding parameter")),
            FirstAxis::MaxMu => x.recip(),
        };
        for p in &ps {
            w.write_record(sweep_row(&k, p))?;
            rows += 1;
        }
    }
    w.flush()?;
    Ok(rows)
}

/// `C_T(a, b)` for fixed `a` over a range of integer `b`.
pub fn write_curve<W: Write>(out: W, a: u64, b: &Range) -> Result<u64> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(CURVE_HEADER)?;
    let mut rows = 0;
    for bv in b.values() {
        if !bv.is_integer() || bv.is_negative() {
            return Err(invalid(format!("b-range: {bv} is not a nonnegative integer")));
        }
        let b = bv.to_integer().to_u64().expect("nonnegative");
        let cost = total_cost(a, b).map(|c| dec(&c)).unwrap_or_default();
        w.write_record([a.to_string(), b.to_string(), cost])?;
        rows += 1;
    }
    w.flush()?;
    Ok(rows)
}
