//! Private read and private write for one `(K, R)` code class, one subpacket
//! at a time.
//!
//! A subpacket covers `y` coded symbols of every submodel, each coded symbol
//! carrying `K` parameters. Database `n` stores, for coded symbol `j`,
//!
//! ```text
//! sum_i W[., j, i] / (f[j][i] - a_n)  +  sum_{t=0..y} a_n^t Z[j][t]
//! ```
//!
//! where `a_n` is the database's evaluation point and `f` the class's
//! constant grid. Reading submodel `theta` takes `K` queries per database and
//! one answer symbol per query from `R' = 2y + K + 1` databases. Writing
//! uploads `K` symbols to each of the `R` databases, which expand them into
//! storage-shaped increments using the queries retained from the read.
//!
//! Submodel indices are zero-based. Shares and queries are laid out block by
//! block: entry `j * M + m` belongs to coded symbol `j` of submodel `m`.

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::ffield::{invert, mat_vec, solve_linear, ConstantGrid, PrimeField};

/// Shape of one code class's subpackets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct ClassGeometry {
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "R")]
    pub r: usize,
    /// Databases answering in the read phase: `R` if `R - K` is odd, else `R - 1`.
    #[serde(rename = "R_read")]
    pub r_read: usize,
    /// Subpacketization `(R' - K - 1) / 2`.
    pub y: usize,
}

impl ClassGeometry {
    pub fn new(k: usize, r: usize) -> Result<Self> {
        let infeasible = Error::InfeasibleCode { a: k as u64, b: r as u64 };
        if k == 0 || r <= k {
            return Err(infeasible);
        }
        let r_read = if (r - k) % 2 == 1 { r } else { r - 1 };
        if r_read < k + 3 {
            return Err(infeasible);
        }
        Ok(Self { k, r, r_read, y: (r_read - k - 1) / 2 })
    }

    /// Parameters per submodel covered by one subpacket.
    pub fn block(&self) -> usize {
        self.y * self.k
    }

    /// Degree of the nuisance polynomial in each answer.
    pub fn answer_degree(&self) -> usize {
        self.k + self.y
    }
}

/// Plaintext of one subpacket: `W[m][j][i]` for all submodels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubpacketPlain {
    m: usize,
    y: usize,
    k: usize,
    values: Vec<u64>,
}

impl SubpacketPlain {
    /// `values[m * y * K + j * K + i]` is `W[m][j][i]`.
    pub fn new(m: usize, geom: &ClassGeometry, values: Vec<u64>) -> Self {
        assert_eq!(values.len(), m * geom.block(), "subpacket size mismatch");
        Self { m, y: geom.y, k: geom.k, values }
    }

    pub fn zeros(m: usize, geom: &ClassGeometry) -> Self {
        Self::new(m, geom, vec![0; m * geom.block()])
    }

    pub fn random<R: Rng + ?Sized>(field: &PrimeField, m: usize, geom: &ClassGeometry, rng: &mut R) -> Self {
        Self::new(m, geom, field.random_vec(rng, m * geom.block()))
    }

    #[inline]
    pub fn get(&self, m: usize, j: usize, i: usize) -> u64 {
        self.values[(m * self.y + j) * self.k + i]
    }

    pub fn submodels(&self) -> usize {
        self.m
    }

    /// The `y * K` parameters of submodel `m`, in `j * K + i` order.
    pub fn submodel(&self, m: usize) -> &[u64] {
        let b = self.y * self.k;
        &self.values[m * b..(m + 1) * b]
    }
}

/// Storage noise `Z[j][t]` (length-`M` vectors, `t = 0..=y`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StorageNoise {
    m: usize,
    y: usize,
    values: Vec<u64>,
}

impl StorageNoise {
    pub fn len_for(m: usize, geom: &ClassGeometry) -> usize {
        geom.y * (geom.y + 1) * m
    }

    pub fn from_values(m: usize, geom: &ClassGeometry, values: Vec<u64>) -> Self {
        assert_eq!(values.len(), Self::len_for(m, geom));
        Self { m, y: geom.y, values }
    }

    pub fn zero(m: usize, geom: &ClassGeometry) -> Self {
        Self::from_values(m, geom, vec![0; Self::len_for(m, geom)])
    }

    pub fn random<R: Rng + ?Sized>(field: &PrimeField, m: usize, geom: &ClassGeometry, rng: &mut R) -> Self {
        Self::from_values(m, geom, field.random_vec(rng, Self::len_for(m, geom)))
    }

    #[inline]
    fn get(&self, j: usize, t: usize, m: usize) -> u64 {
        self.values[(j * (self.y + 1) + t) * self.m + m]
    }
}

/// Share of one subpacket held by the database with evaluation point `alpha`.
pub fn encode_subpacket(
    field: &PrimeField,
    geom: &ClassGeometry,
    grid: &ConstantGrid,
    plain: &SubpacketPlain,
    noise: &StorageNoise,
    alpha: u64,
) -> Result<Vec<u64>> {
    let m_count = plain.submodels();
    let mut share = vec![0u64; m_count * geom.y];
    let powers: Vec<u64> = (0..=geom.y as u64).map(|t| field.pow(alpha, t)).collect();
    for j in 0..geom.y {
        let coeffs: Vec<u64> = (0..geom.k)
            .map(|i| field.inv(field.sub(grid.get(j, i), alpha)))
            .collect::<Result<_>>()?;
        for m in 0..m_count {
            let mut acc = 0;
            for (i, c) in coeffs.iter().enumerate() {
                acc = field.add(acc, field.mul(*c, plain.get(m, j, i)));
            }
            for (t, pw) in powers.iter().enumerate() {
                acc = field.add(acc, field.mul(*pw, noise.get(j, t, m)));
            }
            share[j * m_count + m] = acc;
        }
    }
    Ok(share)
}

/// Query noise `Z~[j][l]` (length-`M` vectors), shared by all databases.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueryNoise {
    m: usize,
    k: usize,
    values: Vec<u64>,
}

impl QueryNoise {
    pub fn len_for(m: usize, geom: &ClassGeometry) -> usize {
        geom.y * geom.k * m
    }

    pub fn from_values(m: usize, geom: &ClassGeometry, values: Vec<u64>) -> Self {
        assert_eq!(values.len(), Self::len_for(m, geom));
        Self { m, k: geom.k, values }
    }

    pub fn zero(m: usize, geom: &ClassGeometry) -> Self {
        Self::from_values(m, geom, vec![0; Self::len_for(m, geom)])
    }

    pub fn random<R: Rng + ?Sized>(field: &PrimeField, m: usize, geom: &ClassGeometry, rng: &mut R) -> Self {
        Self::from_values(m, geom, field.random_vec(rng, Self::len_for(m, geom)))
    }

    #[inline]
    fn get(&self, j: usize, l: usize, m: usize) -> u64 {
        self.values[(j * self.k + l) * self.m + m]
    }
}

/// The `K` query vectors sent to one database.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReadQuery {
    pub slots: Vec<Vec<u64>>,
}

/// Builds the read queries for submodel `theta` for every evaluation point
/// in `alphas`. The same query noise is used for all databases.
pub fn gen_read_queries(
    field: &PrimeField,
    geom: &ClassGeometry,
    grid: &ConstantGrid,
    alphas: &[u64],
    m_count: usize,
    theta: usize,
    noise: &QueryNoise,
) -> Result<Vec<ReadQuery>> {
    if theta >= m_count {
        return Err(Error::ProtocolViolation(format!(
            "submodel {theta} out of range for {m_count} submodels"
        )));
    }
    // Denominators prod_{i != l} (f[j][i] - f[j][l]) do not depend on the database.
    let mut scale = vec![0u64; geom.y * geom.k];
    for j in 0..geom.y {
        for l in 0..geom.k {
            let den = field.product((0..geom.k).filter(|&i| i != l).map(|i| field.sub(grid.get(j, i), grid.get(j, l))));
            scale[j * geom.k + l] = field.inv(den)?;
        }
    }
    alphas
        .iter()
        .map(|&alpha| {
            let slots = (0..geom.k)
                .map(|l| {
                    let mut q = vec![0u64; geom.y * m_count];
                    for j in 0..geom.y {
                        let full = field.product((0..geom.k).map(|i| field.sub(grid.get(j, i), alpha)));
                        let partial =
                            field.product((0..geom.k).filter(|&i| i != l).map(|i| field.sub(grid.get(j, i), alpha)));
                        let lead = field.mul(partial, scale[j * geom.k + l]);
                        for m in 0..m_count {
                            let mut v = field.mul(full, noise.get(j, l, m));
                            if m == theta {
                                v = field.add(v, lead);
                            }
                            q[j * m_count + m] = v;
                        }
                    }
                    q
                })
                .collect();
            Ok(ReadQuery { slots })
        })
        .collect()
}

/// `share . query`.
pub fn answer_query(field: &PrimeField, share: &[u64], query: &[u64]) -> Result<u64> {
    if share.len() != query.len() {
        return Err(Error::ProtocolViolation(format!(
            "query of length {} against share of length {}",
            query.len(),
            share.len()
        )));
    }
    Ok(field.dot(share, query))
}

/// Coefficient matrix of the answers for slot `l`: one row per reading
/// database, `y` rational columns `1/(f[j][l] - a_n)` then `K + y + 1`
/// powers of `a_n`.
fn decode_matrix(
    field: &PrimeField,
    geom: &ClassGeometry,
    grid: &ConstantGrid,
    alphas: &[u64],
    l: usize,
) -> Result<Vec<Vec<u64>>> {
    alphas
        .iter()
        .map(|&a| {
            let mut row = Vec::with_capacity(geom.r_read);
            for j in 0..geom.y {
                row.push(field.inv(field.sub(grid.get(j, l), a))?);
            }
            row.extend((0..=geom.answer_degree() as u64).map(|t| field.pow(a, t)));
            Ok(row)
        })
        .collect()
}

fn check_answers(geom: &ClassGeometry, alphas: &[u64], answers: &[Vec<u64>]) -> Result<()> {
    if alphas.len() != geom.r_read || answers.len() != geom.r_read {
        return Err(Error::ProtocolViolation(format!(
            "decoding needs answers from exactly {} databases, got {} answers for {} points",
            geom.r_read,
            answers.len(),
            alphas.len()
        )));
    }
    if answers.iter().any(|a| a.len() != geom.k) {
        return Err(Error::ProtocolViolation(format!("each database must return {} answers", geom.k)));
    }
    Ok(())
}

/// Recovers the `y * K` parameters (`j * K + l` order) of the requested
/// submodel from `answers[d][l]`, the answer of the `d`-th reading database
/// (evaluation point `alphas[d]`) to its `l`-th query.
pub fn decode_answers(
    field: &PrimeField,
    geom: &ClassGeometry,
    grid: &ConstantGrid,
    alphas: &[u64],
    answers: &[Vec<u64>],
) -> Result<Vec<u64>> {
    check_answers(geom, alphas, answers)?;
    let mut out = vec![0u64; geom.block()];
    for l in 0..geom.k {
        let a = decode_matrix(field, geom, grid, alphas, l)?;
        let b: Vec<u64> = answers.iter().map(|ans| ans[l]).collect();
        let x = solve_linear(field, &a, &b)?;
        for j in 0..geom.y {
            out[j * geom.k + l] = x[j];
        }
    }
    Ok(out)
}

/// [`decode_answers`] with the per-slot systems inverted once, for decoding
/// many subpackets against the same reading set.
#[derive(Debug, Clone)]
pub struct Decoder {
    geom: ClassGeometry,
    alphas: Vec<u64>,
    /// First `y` rows of each slot's inverse.
    rows: Vec<Vec<Vec<u64>>>,
}

impl Decoder {
    pub fn new(field: &PrimeField, geom: &ClassGeometry, grid: &ConstantGrid, alphas: &[u64]) -> Result<Self> {
        if alphas.len() != geom.r_read {
            return Err(Error::ProtocolViolation(format!(
                "decoder needs {} reading databases, got {}",
                geom.r_read,
                alphas.len()
            )));
        }
        let rows = (0..geom.k)
            .map(|l| {
                let inv = invert(field, &decode_matrix(field, geom, grid, alphas, l)?)?;
                Ok(inv.into_iter().take(geom.y).collect())
            })
            .collect::<Result<_>>()?;
        Ok(Self { geom: *geom, alphas: alphas.to_vec(), rows })
    }

    pub fn decode(&self, field: &PrimeField, answers: &[Vec<u64>]) -> Result<Vec<u64>> {
        check_answers(&self.geom, &self.alphas, answers)?;
        let k = self.geom.k;
        let mut out = vec![0u64; self.geom.block()];
        for (l, rows) in self.rows.iter().enumerate() {
            let b: Vec<u64> = answers.iter().map(|ans| ans[l]).collect();
            for (j, v) in mat_vec(field, rows, &b).into_iter().enumerate() {
                out[j * k + l] = v;
            }
        }
        Ok(out)
    }
}

/// Update noise: one symbol `z^_l` per slot.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UpdateNoise {
    values: Vec<u64>,
}

impl UpdateNoise {
    pub fn from_values(geom: &ClassGeometry, values: Vec<u64>) -> Self {
        assert_eq!(values.len(), geom.k);
        Self { values }
    }

    pub fn zero(geom: &ClassGeometry) -> Self {
        Self::from_values(geom, vec![0; geom.k])
    }

    pub fn random<R: Rng + ?Sized>(field: &PrimeField, geom: &ClassGeometry, rng: &mut R) -> Self {
        Self::from_values(geom, field.random_vec(rng, geom.k))
    }
}

/// The `K` combined updates for each evaluation point in `alphas`. `delta`
/// holds the `y * K` parameter updates in `j * K + l` order.
pub fn gen_write_updates(
    field: &PrimeField,
    geom: &ClassGeometry,
    grid: &ConstantGrid,
    alphas: &[u64],
    delta: &[u64],
    noise: &UpdateNoise,
) -> Result<Vec<Vec<u64>>> {
    if delta.len() != geom.block() {
        return Err(Error::ProtocolViolation(format!(
            "update has {} symbols, subpacket holds {}",
            delta.len(),
            geom.block()
        )));
    }
    let (y, k) = (geom.y, geom.k);
    // Rescaled updates, independent of the database.
    let mut scaled = vec![0u64; y * k];
    for l in 0..k {
        for j in 0..y {
            let num = field.product((0..k).filter(|&i| i != l).map(|i| field.sub(grid.get(j, i), grid.get(j, l))));
            let den = field.product((0..y).filter(|&i| i != j).map(|i| field.sub(grid.get(i, l), grid.get(j, l))));
            scaled[j * k + l] = field.mul(field.div(num, den)?, delta[j * k + l]);
        }
    }
    Ok(alphas
        .iter()
        .map(|&alpha| {
            (0..k)
                .map(|l| {
                    let diffs: Vec<u64> = (0..y).map(|i| field.sub(grid.get(i, l), alpha)).collect();
                    let mut u = field.mul(field.product(diffs.iter().copied()), noise.values[l]);
                    for j in 0..y {
                        let others = field.product(diffs.iter().enumerate().filter(|&(i, _)| i != j).map(|(_, &d)| d));
                        u = field.add(u, field.mul(others, scaled[j * k + l]));
                    }
                    u
                })
                .collect()
        })
        .collect())
}

/// Database-side expansion of the combined update `u` for slot `l` into a
/// storage-shaped increment, using the retained query for the same slot.
pub fn incremental_update(
    field: &PrimeField,
    geom: &ClassGeometry,
    grid: &ConstantGrid,
    alpha: u64,
    l: usize,
    u: u64,
    query: &[u64],
) -> Result<Vec<u64>> {
    if l >= geom.k || !query.len().is_multiple_of(geom.y) {
        return Err(Error::ProtocolViolation(format!(
            "retained query of length {} does not match slot {l} of a ({},{}) class",
            query.len(),
            geom.k,
            geom.r
        )));
    }
    let m_count = query.len() / geom.y;
    let mut out = vec![0u64; query.len()];
    for j in 0..geom.y {
        let scale = field.inv(field.product((0..geom.k).map(|i| field.sub(grid.get(j, i), alpha))))?;
        let factor = field.mul(u, scale);
        for m in 0..m_count {
            out[j * m_count + m] = field.mul(factor, query[j * m_count + m]);
        }
    }
    Ok(out)
}

/// Adds the increments of all `K` slots to a share.
pub fn apply_updates(field: &PrimeField, share: &[u64], increments: &[Vec<u64>]) -> Result<Vec<u64>> {
    let mut out = share.to_vec();
    for inc in increments {
        if inc.len() != share.len() {
            return Err(Error::ProtocolViolation(format!(
                "increment of length {} against share of length {}",
                inc.len(),
                share.len()
            )));
        }
        for (s, d) in out.iter_mut().zip(inc) {
            *s = field.add(*s, *d);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ffield::{gen_constants, MERSENNE_31};
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn f7() -> PrimeField {
        PrimeField::new(7).unwrap()
    }

    fn tiny() -> (ClassGeometry, ConstantGrid) {
        (ClassGeometry::new(1, 4).unwrap(), ConstantGrid::new(1, 1, vec![3]))
    }

    #[test]
    fn geometry_rules() {
        let g = ClassGeometry::new(2, 8).unwrap();
        assert_eq!((g.r_read, g.y), (7, 2));
        let g = ClassGeometry::new(2, 9).unwrap();
        assert_eq!((g.r_read, g.y), (9, 3));
        let g = ClassGeometry::new(3, 11).unwrap();
        assert_eq!((g.r_read, g.y), (10, 3));
        assert!(ClassGeometry::new(1, 3).is_err());
        assert!(ClassGeometry::new(2, 4).is_err());
    }

    #[test]
    fn encode_hand_example() {
        let f = f7();
        let (g, grid) = tiny();
        let plain = SubpacketPlain::new(1, &g, vec![2]);
        let share = encode_subpacket(&f, &g, &grid, &plain, &StorageNoise::zero(1, &g), 1).unwrap();
        assert_eq!(share, vec![1]);
        let zero = encode_subpacket(&f, &g, &grid, &SubpacketPlain::zeros(1, &g), &StorageNoise::zero(1, &g), 1).unwrap();
        assert_eq!(zero, vec![0]);
    }

    #[test]
    fn noiseless_query_is_unit_vector() {
        let f = f7();
        let (g, grid) = tiny();
        let qs = gen_read_queries(&f, &g, &grid, &[1, 2, 4, 5], 2, 1, &QueryNoise::zero(2, &g)).unwrap();
        for q in qs {
            assert_eq!(q.slots, vec![vec![0, 1]]);
        }
    }

    #[test]
    fn noiseless_answer_and_increment() {
        let f = f7();
        let (g, grid) = tiny();
        let alpha = 1;
        let plain = SubpacketPlain::new(1, &g, vec![2]);
        let share = encode_subpacket(&f, &g, &grid, &plain, &StorageNoise::zero(1, &g), alpha).unwrap();
        let q = &gen_read_queries(&f, &g, &grid, &[alpha], 1, 0, &QueryNoise::zero(1, &g)).unwrap()[0];
        let a = answer_query(&f, &share, &q.slots[0]).unwrap();
        assert_eq!(a, f.mul(f.inv(2).unwrap(), 2));
        assert_eq!(answer_query(&f, &[0], &q.slots[0]).unwrap(), 0);

        let u = gen_write_updates(&f, &g, &grid, &[alpha], &[5], &UpdateNoise::zero(&g)).unwrap();
        assert_eq!(u, vec![vec![5]]);
        let inc = incremental_update(&f, &g, &grid, alpha, 0, u[0][0], &q.slots[0]).unwrap();
        assert_eq!(inc, vec![f.mul(f.inv(2).unwrap(), 5)]);
        assert_eq!(incremental_update(&f, &g, &grid, alpha, 0, 0, &q.slots[0]).unwrap(), vec![0]);
    }

    #[test]
    fn answer_dimension_mismatch() {
        assert!(matches!(answer_query(&f7(), &[1, 2], &[1]), Err(Error::ProtocolViolation(_))));
    }

    struct Instance {
        field: PrimeField,
        geom: ClassGeometry,
        grid: ConstantGrid,
        alphas: Vec<u64>,
    }

    fn instance(k: usize, r: usize, seed: u64) -> Instance {
        let field = PrimeField::new(MERSENNE_31).unwrap();
        let geom = ClassGeometry::new(k, r).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let pool = gen_constants(&field, r, &[(geom.y, geom.k)], &mut rng).unwrap();
        Instance { field, geom, grid: pool.grids[0].clone(), alphas: pool.alphas }
    }

    /// Full read-write session on one subpacket, returning the decoded
    /// pre-write slice and the shares after the write.
    fn session(
        inst: &Instance,
        shares: &[Vec<u64>],
        m: usize,
        theta: usize,
        delta: &[u64],
        rng: &mut ChaCha20Rng,
    ) -> (Vec<u64>, Vec<Vec<u64>>) {
        let Instance { field, geom, grid, alphas } = inst;
        let qn = QueryNoise::random(field, m, geom, rng);
        let queries = gen_read_queries(field, geom, grid, alphas, m, theta, &qn).unwrap();
        let read = &alphas[..geom.r_read];
        let answers: Vec<Vec<u64>> = (0..geom.r_read)
            .map(|d| queries[d].slots.iter().map(|q| answer_query(field, &shares[d], q).unwrap()).collect())
            .collect();
        let decoded = decode_answers(field, geom, grid, read, &answers).unwrap();
        let cached = Decoder::new(field, geom, grid, read).unwrap().decode(field, &answers).unwrap();
        assert_eq!(decoded, cached);

        let un = UpdateNoise::random(field, geom, rng);
        let updates = gen_write_updates(field, geom, grid, alphas, delta, &un).unwrap();
        let new_shares = shares
            .iter()
            .enumerate()
            .map(|(d, s)| {
                let incs: Vec<Vec<u64>> = (0..geom.k)
                    .map(|l| incremental_update(field, geom, grid, alphas[d], l, updates[d][l], &queries[d].slots[l]).unwrap())
                    .collect();
                apply_updates(field, s, &incs).unwrap()
            })
            .collect();
        (decoded, new_shares)
    }

    fn read_only(inst: &Instance, shares: &[Vec<u64>], m: usize, theta: usize, rng: &mut ChaCha20Rng) -> Vec<u64> {
        let zero = vec![0; inst.geom.block()];
        session(inst, shares, m, theta, &zero, rng).0
    }

    #[test]
    fn read_write_round_trip() {
        for (k, r) in [(1, 4), (2, 7), (2, 8), (3, 11), (3, 12)] {
            let inst = instance(k, r, 11 + k as u64 * 100 + r as u64);
            let mut rng = ChaCha20Rng::seed_from_u64(7);
            let m = 3;
            let plain = SubpacketPlain::random(&inst.field, m, &inst.geom, &mut rng);
            let noise = StorageNoise::random(&inst.field, m, &inst.geom, &mut rng);
            let shares: Vec<Vec<u64>> = inst
                .alphas
                .iter()
                .map(|&a| encode_subpacket(&inst.field, &inst.geom, &inst.grid, &plain, &noise, a).unwrap())
                .collect();
            let theta = 1;
            let delta = inst.field.random_vec(&mut rng, inst.geom.block());
            let (decoded, after) = session(&inst, &shares, m, theta, &delta, &mut rng);
            assert_eq!(decoded, plain.submodel(theta), "({k},{r})");
            for mm in 0..m {
                let got = read_only(&inst, &after, m, mm, &mut rng);
                let want: Vec<u64> = if mm == theta {
                    plain.submodel(mm).iter().zip(&delta).map(|(w, d)| inst.field.add(*w, *d)).collect()
                } else {
                    plain.submodel(mm).to_vec()
                };
                assert_eq!(got, want, "({k},{r}) submodel {mm}");
            }
        }
    }

    #[test]
    fn hundred_decodes_k2_r8() {
        let inst = instance(2, 8, 99);
        let mut rng = ChaCha20Rng::seed_from_u64(100);
        for _ in 0..100 {
            let plain = SubpacketPlain::random(&inst.field, 3, &inst.geom, &mut rng);
            let noise = StorageNoise::random(&inst.field, 3, &inst.geom, &mut rng);
            let shares: Vec<Vec<u64>> = inst
                .alphas
                .iter()
                .map(|&a| encode_subpacket(&inst.field, &inst.geom, &inst.grid, &plain, &noise, a).unwrap())
                .collect();
            let theta = rng.gen_range(0..3);
            assert_eq!(read_only(&inst, &shares, 3, theta, &mut rng), plain.submodel(theta));
        }
    }

    #[test]
    fn underdetermined_decode_rejected() {
        let inst = instance(2, 8, 1);
        let answers = vec![vec![0, 0]; inst.geom.r_read - 1];
        let err = decode_answers(&inst.field, &inst.geom, &inst.grid, &inst.alphas[..inst.geom.r_read - 1], &answers);
        assert!(matches!(err, Err(Error::ProtocolViolation(_))));
    }

    #[test]
    fn corrupted_constants_are_singular() {
        let inst = instance(1, 4, 1);
        let mut alphas = inst.alphas[..4].to_vec();
        alphas[1] = alphas[0];
        let answers = vec![vec![0]; 4];
        assert_eq!(
            decode_answers(&inst.field, &inst.geom, &inst.grid, &alphas, &answers),
            Err(Error::SingularSystem)
        );
    }

    #[test]
    fn zero_update_zero_noise() {
        let inst = instance(2, 7, 4);
        let u = gen_write_updates(&inst.field, &inst.geom, &inst.grid, &inst.alphas, &[0; 4], &UpdateNoise::zero(&inst.geom))
            .unwrap();
        assert!(u.iter().flatten().all(|&v| v == 0));
        let share = vec![5u64; 3 * inst.geom.y];
        assert_eq!(apply_updates(&inst.field, &share, &[vec![0; 3 * inst.geom.y]]).unwrap(), share);
    }
}
