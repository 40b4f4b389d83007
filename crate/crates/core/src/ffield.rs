//! Prime-field arithmetic, dense exact linear solving, and the globally known
//! evaluation constants shared by users and databases.
//!
//! Elements are plain `u64` values in `[0, q)`. The modulus is capped below
//! 2^32 so every product of two reduced elements fits in a `u64`.

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};

/// The default simulation modulus, 2^31 - 1.
pub const MERSENNE_31: u64 = 2_147_483_647;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PrimeField {
    q: u64,
}

impl PrimeField {
    pub fn new(q: u64) -> Result<Self> {
        if !(2..1 << 32).contains(&q) || !is_prime(q) {
            return Err(Error::InvalidModulus(q));
        }
        Ok(Self { q })
    }

    pub fn modulus(&self) -> u64 {
        self.q
    }

    #[inline]
    pub fn reduce(&self, x: u64) -> u64 {
        x % self.q
    }

    #[inline]
    pub fn add(&self, a: u64, b: u64) -> u64 {
        let s = a + b;
        if s >= self.q {
            s - self.q
        } else {
            s
        }
    }

    #[inline]
    pub fn sub(&self, a: u64, b: u64) -> u64 {
        if a >= b {
            a - b
        } else {
            a + self.q - b
        }
    }

    #[inline]
    pub fn neg(&self, a: u64) -> u64 {
        if a == 0 {
            0
        } else {
            self.q - a
        }
    }

    #[inline]
    pub fn mul(&self, a: u64, b: u64) -> u64 {
        (a * b) % self.q
    }

    pub fn pow(&self, mut base: u64, mut exp: u64) -> u64 {
        let mut acc = 1 % self.q;
        base %= self.q;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            exp >>= 1;
        }
        acc
    }

    /// Multiplicative inverse by the extended Euclidean algorithm.
    pub fn inv(&self, x: u64) -> Result<u64> {
        let x = x % self.q;
        if x == 0 {
            return Err(Error::DivisionByZero);
        }
        let (mut r0, mut r1) = (self.q as i64, x as i64);
        let (mut t0, mut t1) = (0i64, 1i64);
        while r1 != 0 {
            let quot = r0 / r1;
            (r0, r1) = (r1, r0 - quot * r1);
            (t0, t1) = (t1, t0 - quot * t1);
        }
        Ok(t0.rem_euclid(self.q as i64) as u64)
    }

    pub fn div(&self, a: u64, b: u64) -> Result<u64> {
        Ok(self.mul(a, self.inv(b)?))
    }

    /// Uniform element of the field.
    pub fn random<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        rng.gen_range(0..self.q)
    }

    pub fn random_vec<R: Rng + ?Sized>(&self, rng: &mut R, len: usize) -> Vec<u64> {
        (0..len).map(|_| self.random(rng)).collect()
    }

    /// Inner product of two equal-length vectors.
    pub fn dot(&self, a: &[u64], b: &[u64]) -> u64 {
        debug_assert_eq!(a.len(), b.len());
        a.iter()
            .zip(b)
            .fold(0, |acc, (&x, &y)| self.add(acc, self.mul(x, y)))
    }

    /// Product of `values`; the empty product is 1.
    pub fn product<I: IntoIterator<Item = u64>>(&self, values: I) -> u64 {
        values.into_iter().fold(1 % self.q, |acc, v| self.mul(acc, v))
    }
}

fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n.is_multiple_of(2) {
        return n == 2;
    }
    let mut d = 3;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 2;
    }
    true
}

/// Solves `a * x = b` by Gauss-Jordan elimination, pivoting on the first
/// nonzero entry of each column.
pub fn solve_linear(field: &PrimeField, a: &[Vec<u64>], b: &[u64]) -> Result<Vec<u64>> {
    let n = a.len();
    if b.len() != n || a.iter().any(|row| row.len() != n) {
        return Err(Error::ProtocolViolation(format!(
            "solve_linear expects a square system, got {}x{} with rhs {}",
            n,
            a.first().map_or(0, Vec::len),
            b.len()
        )));
    }
    let mut aug: Vec<Vec<u64>> = a
        .iter()
        .zip(b)
        .map(|(row, &rhs)| {
            let mut r: Vec<u64> = row.iter().map(|&v| field.reduce(v)).collect();
            r.push(field.reduce(rhs));
            r
        })
        .collect();
    eliminate(field, &mut aug, n)?;
    Ok(aug.into_iter().map(|row| row[n]).collect())
}

/// Inverse of a square matrix.
pub fn invert(field: &PrimeField, a: &[Vec<u64>]) -> Result<Vec<Vec<u64>>> {
    let n = a.len();
    if a.iter().any(|row| row.len() != n) {
        return Err(Error::ProtocolViolation("invert expects a square matrix".into()));
    }
    let mut aug: Vec<Vec<u64>> = a
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r: Vec<u64> = row.iter().map(|&v| field.reduce(v)).collect();
            r.extend((0..n).map(|j| u64::from(i == j)));
            r
        })
        .collect();
    eliminate(field, &mut aug, n)?;
    Ok(aug.into_iter().map(|row| row[n..].to_vec()).collect())
}

/// Reduces the left `n` columns of `aug` to the identity in place.
fn eliminate(field: &PrimeField, aug: &mut [Vec<u64>], n: usize) -> Result<()> {
    for col in 0..n {
        let pivot = (col..n)
            .find(|&r| aug[r][col] != 0)
            .ok_or(Error::SingularSystem)?;
        aug.swap(col, pivot);
        let inv = field.inv(aug[col][col])?;
        for v in aug[col].iter_mut() {
            *v = field.mul(*v, inv);
        }
        let pivot_row = aug[col].clone();
        for (r, row) in aug.iter_mut().enumerate() {
            if r == col || row[col] == 0 {
                continue;
            }
            let factor = row[col];
            for (v, &p) in row.iter_mut().zip(&pivot_row) {
                *v = field.sub(*v, field.mul(factor, p));
            }
        }
    }
    Ok(())
}

/// Matrix-vector product.
pub fn mat_vec(field: &PrimeField, a: &[Vec<u64>], x: &[u64]) -> Vec<u64> {
    a.iter().map(|row| field.dot(row, x)).collect()
}

/// A `rows x cols` grid of evaluation constants for one code class: row `j`
/// is the coded-symbol index, column `i` the parameter slot.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConstantGrid {
    rows: usize,
    cols: usize,
    values: Vec<u64>,
}

impl ConstantGrid {
    pub fn new(rows: usize, cols: usize, values: Vec<u64>) -> Self {
        assert_eq!(rows * cols, values.len());
        Self { rows, cols, values }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Constant for coded symbol `j` and slot `i` (both zero-based).
    #[inline]
    pub fn get(&self, j: usize, i: usize) -> u64 {
        self.values[j * self.cols + i]
    }

    pub fn values(&self) -> &[u64] {
        &self.values
    }
}

/// Distinct evaluation points, one per database, plus one constant grid per
/// code class.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConstantsPool {
    pub alphas: Vec<u64>,
    pub grids: Vec<ConstantGrid>,
}

impl ConstantsPool {
    /// Checks the distinctness rules: alphas pairwise distinct and nonzero,
    /// grid entries distinct within a grid and never equal to any alpha.
    pub fn validate(&self, field: &PrimeField) -> Result<()> {
        let q = field.modulus();
        let mut seen = std::collections::HashSet::new();
        for &a in &self.alphas {
            if a == 0 || a >= q || !seen.insert(a) {
                return Err(Error::InvalidConstraints(format!(
                    "evaluation point {a} is zero, out of range or repeated"
                )));
            }
        }
        for grid in &self.grids {
            let mut in_grid = std::collections::HashSet::new();
            for &f in grid.values() {
                if f == 0 || f >= q || seen.contains(&f) || !in_grid.insert(f) {
                    return Err(Error::InvalidConstraints(format!(
                        "code constant {f} is zero, out of range, repeated or collides with an evaluation point"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Draws `n` evaluation points and one `(y, K)` grid per class shape, all
/// distinct and nonzero. Requires `q > n + sum(y * K)`.
pub fn gen_constants<R: Rng + ?Sized>(
    field: &PrimeField,
    n: usize,
    class_shapes: &[(usize, usize)],
    rng: &mut R,
) -> Result<ConstantsPool> {
    let needed = n + class_shapes.iter().map(|&(y, k)| y * k).sum::<usize>();
    let q = field.modulus();
    if q <= needed as u64 {
        return Err(Error::FieldTooSmall { q, needed });
    }
    let picks = rand::seq::index::sample(rng, (q - 1) as usize, needed);
    let mut values = picks.into_iter().map(|v| v as u64 + 1);
    let alphas: Vec<u64> = values.by_ref().take(n).collect();
    let grids = class_shapes
        .iter()
        .map(|&(y, k)| ConstantGrid::new(y, k, values.by_ref().take(y * k).collect()))
        .collect();
    Ok(ConstantsPool { alphas, grids })
}
