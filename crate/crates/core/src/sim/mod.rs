//! In-process databases running a [`StoragePlan`].
//!
//! [`install_plan`] encodes a model onto `N` [`DatabaseState`]s, one share per
//! subpacket per partition member. A [`Cluster`] then runs read-update-write
//! sessions against them while a [`SessionLedger`] counts the symbols that
//! cross the user/database boundary.
//!
//! Parameters of a submodel are laid out class by class, partition by
//! partition, subpacket by subpacket; inside a subpacket in `j * K + i` order.

mod ledger;
mod probe;
mod snapshot;

use std::collections::BTreeMap;

use num::ToPrimitive;
use rand::Rng;
use serde::Serialize;

pub use ledger::{measure_costs, ClassCost, ClassUsage, CostReport, SessionLedger};
pub use probe::{privacy_probe, ProbeConfig, DEFAULT_BUDGET, DEFAULT_SAMPLES, SIGNIFICANCE, ProbeMethod, ProbeMode, ProbeReport, ViewComparison};

use crate::error::{Error, Result};
use crate::ffield::{gen_constants, ConstantsPool, PrimeField};
use crate::planner::StoragePlan;
use crate::pruw::{
    answer_query, encode_subpacket, gen_read_queries, gen_write_updates, incremental_update, ClassGeometry,
    Decoder, QueryNoise, SubpacketPlain, StorageNoise, UpdateNoise,
};
use crate::ratio::int;

/// Where one partition's subpackets live.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PartitionLayout {
    /// Databases storing the partition, ascending.
    pub members: Vec<usize>,
    /// Databases answering reads: all members, or all but the highest-indexed
    /// one when `R - K` is even.
    pub readers: Vec<usize>,
    /// Offset of the partition's first parameter within a submodel.
    pub offset: usize,
    pub subpackets: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ClassLayout {
    pub geometry: ClassGeometry,
    pub partitions: Vec<PartitionLayout>,
}

impl ClassLayout {
    /// Parameters of each submodel covered by this class.
    pub fn parameters(&self) -> usize {
        self.partitions.iter().map(|p| p.subpackets).sum::<usize>() * self.geometry.block()
    }

    /// Databases holding at least one partition of the class, ascending.
    pub fn holders(&self) -> Vec<usize> {
        let mut all: Vec<usize> = self.partitions.iter().flat_map(|p| p.members.iter().copied()).collect();
        all.sort_unstable();
        all.dedup();
        all
    }
}

/// Maps every partition to a contiguous parameter range of length
/// `eta * L`, split into subpackets of `y * K` parameters.
pub fn layout_plan(plan: &StoragePlan) -> Result<Vec<ClassLayout>> {
    let l = int(plan.length as i64);
    let mut offset = 0usize;
    let mut out = Vec::with_capacity(plan.classes.len());
    for class in &plan.classes {
        let geometry = class.geometry;
        let block = int(geometry.block() as i64);
        let mut partitions = Vec::with_capacity(class.partitions.entries.len());
        for e in &class.partitions.entries {
            let count = &e.eta * &l / &block;
            if !count.is_integer() {
                return Err(Error::IncompatibleLength { length: plan.length, granularity: plan.granularity });
            }
            let subpackets = count.to_integer().to_usize().expect("subpacket count fits usize");
            let mut readers = e.members.clone();
            readers.truncate(geometry.r_read);
            partitions.push(PartitionLayout { members: e.members.clone(), readers, offset, subpackets });
            offset += subpackets * geometry.block();
        }
        out.push(ClassLayout { geometry, partitions });
    }
    if offset as u64 != plan.length {
        return Err(Error::ProtocolViolation(format!(
            "layout covers {offset} parameters per submodel, plan length is {}",
            plan.length
        )));
    }
    Ok(out)
}

/// Queries a database keeps between the read and write phases of a session.
#[derive(Debug, Clone, PartialEq, Eq)]
struct Retained {
    session: u64,
    slots: Vec<Vec<u64>>,
}

/// One database: its coded shares and the queries retained for the current
/// session.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatabaseState {
    index: usize,
    alpha: u64,
    capacity: u64,
    /// `(class, partition)` to one share per subpacket.
    shares: BTreeMap<(usize, usize), Vec<Vec<u64>>>,
    /// Class index to the `K` query vectors of the latest session.
    retained: BTreeMap<usize, Retained>,
}

impl DatabaseState {
    pub fn index(&self) -> usize {
        self.index
    }

    pub fn alpha(&self) -> u64 {
        self.alpha
    }

    /// `mu(n) * M * L` symbols.
    pub fn capacity(&self) -> u64 {
        self.capacity
    }

    /// Stored symbols.
    pub fn occupancy(&self) -> u64 {
        self.shares.values().flat_map(|v| v.iter()).map(|s| s.len() as u64).sum()
    }

    pub fn share(&self, class: usize, partition: usize, subpacket: usize) -> Option<&[u64]> {
        self.shares.get(&(class, partition)).and_then(|v| v.get(subpacket)).map(Vec::as_slice)
    }

    pub fn holds(&self, class: usize, partition: usize) -> bool {
        self.shares.contains_key(&(class, partition))
    }

    fn receive_queries(&mut self, session: u64, class: usize, slots: Vec<Vec<u64>>) {
        self.retained.insert(class, Retained { session, slots });
    }

    fn retained_for(&self, session: u64, class: usize) -> Result<&[Vec<u64>]> {
        match self.retained.get(&class) {
            Some(r) if r.session == session => Ok(&r.slots),
            _ => Err(Error::ProtocolViolation(format!(
                "database {} holds no query for class {class} in session {session}",
                self.index
            ))),
        }
    }

    fn stored(&self, class: usize, partition: usize, subpacket: usize) -> Result<&[u64]> {
        self.share(class, partition, subpacket).ok_or_else(|| {
            Error::ProtocolViolation(format!(
                "database {} does not store subpacket {subpacket} of partition {partition} in class {class}",
                self.index
            ))
        })
    }

    /// The `K` answers to the retained queries for one subpacket.
    fn answer(&self, field: &PrimeField, session: u64, class: usize, partition: usize, subpacket: usize) -> Result<Vec<u64>> {
        let share = self.stored(class, partition, subpacket)?;
        self.retained_for(session, class)?.iter().map(|q| answer_query(field, share, q)).collect()
    }

    /// Sum over slots of the incremental updates for the combined updates `u`.
    fn increment(
        &self,
        field: &PrimeField,
        session: u64,
        class: usize,
        geometry: &ClassGeometry,
        grid: &crate::ffield::ConstantGrid,
        u: &[u64],
    ) -> Result<Vec<u64>> {
        let queries = self.retained_for(session, class)?;
        if u.len() != geometry.k {
            return Err(Error::ProtocolViolation(format!("expected {} update symbols, got {}", geometry.k, u.len())));
        }
        let mut total = vec![0u64; queries[0].len()];
        for (l, (&ul, q)) in u.iter().zip(queries).enumerate() {
            let inc = incremental_update(field, geometry, grid, self.alpha, l, ul, q)?;
            for (t, d) in total.iter_mut().zip(inc) {
                *t = field.add(*t, d);
            }
        }
        Ok(total)
    }
}

/// Uncoded mirror of the model, updated alongside every session.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlainOracle {
    field: PrimeField,
    model: Vec<Vec<u64>>,
}

impl PlainOracle {
    pub fn new(field: &PrimeField, model: Vec<Vec<u64>>) -> Self {
        let model = model.into_iter().map(|row| row.into_iter().map(|v| field.reduce(v)).collect()).collect();
        Self { field: *field, model }
    }

    pub fn submodel(&self, m: usize) -> &[u64] {
        &self.model[m]
    }

    pub fn model(&self) -> &[Vec<u64>] {
        &self.model
    }

    pub fn apply(&mut self, theta: usize, delta: &[u64]) {
        for (w, d) in self.model[theta].iter_mut().zip(delta) {
            *w = self.field.add(*w, self.field.reduce(*d));
        }
    }
}

/// Result of one session.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SessionOutcome {
    /// Submodel `theta` as read before the update, at the requested length.
    pub recovered: Vec<u64>,
    pub ledger: SessionLedger,
}

/// The databases of an installed plan together with the public constants.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cluster {
    field: PrimeField,
    plan: StoragePlan,
    constants: ConstantsPool,
    layout: Vec<ClassLayout>,
    databases: Vec<DatabaseState>,
    sessions: u64,
}

/// Encodes `model` (`M` rows of the plan's requested or padded length) onto
/// the plan's databases. Storage noise and public constants are drawn from
/// `rng`, playing the trusted initializer.
pub fn install_plan<R: Rng + ?Sized>(
    field: &PrimeField,
    plan: &StoragePlan,
    model: &[Vec<u64>],
    rng: &mut R,
) -> Result<Cluster> {
    let m = plan.submodels as usize;
    if model.len() != m {
        return Err(Error::ProtocolViolation(format!("model has {} submodels, plan expects {m}", model.len())));
    }
    let layout = layout_plan(plan)?;
    let padded: Vec<Vec<u64>> = model.iter().map(|row| pad_row(field, plan, row)).collect::<Result<_>>()?;

    let shapes: Vec<(usize, usize)> = layout.iter().map(|c| (c.geometry.y, c.geometry.k)).collect();
    let constants = gen_constants(field, plan.n(), &shapes, rng)?;

    let mut databases: Vec<DatabaseState> = constants
        .alphas
        .iter()
        .enumerate()
        .map(|(index, &alpha)| DatabaseState {
            index,
            alpha,
            capacity: capacity(plan, index),
            shares: BTreeMap::new(),
            retained: BTreeMap::new(),
        })
        .collect();

    for (c, class) in layout.iter().enumerate() {
        let geom = &class.geometry;
        let grid = &constants.grids[c];
        for (p, part) in class.partitions.iter().enumerate() {
            for s in 0..part.subpackets {
                let start = part.offset + s * geom.block();
                let values = padded.iter().flat_map(|row| row[start..start + geom.block()].iter().copied()).collect();
                let plain = SubpacketPlain::new(m, geom, values);
                let noise = StorageNoise::random(field, m, geom, rng);
                for &n in &part.members {
                    let share = encode_subpacket(field, geom, grid, &plain, &noise, databases[n].alpha)?;
                    databases[n].shares.entry((c, p)).or_default().push(share);
                }
            }
        }
    }

    let cluster = Cluster { field: *field, plan: plan.clone(), constants, layout, databases, sessions: 0 };
    cluster.audit()?;
    Ok(cluster)
}

fn capacity(plan: &StoragePlan, n: usize) -> u64 {
    let cap = &plan.profile.mu()[n] * int(plan.submodels as i64) * int(plan.length as i64);
    cap.floor().to_integer().to_u64().expect("capacity fits u64")
}

/// Zero-extends a row of the requested length to the padded length.
fn pad_row(field: &PrimeField, plan: &StoragePlan, row: &[u64]) -> Result<Vec<u64>> {
    let len = row.len() as u64;
    if len != plan.length && len != plan.requested_length {
        return Err(Error::ProtocolViolation(format!(
            "row of length {len}, expected {} or {}",
            plan.requested_length, plan.length
        )));
    }
    let mut out: Vec<u64> = row.iter().map(|&v| field.reduce(v)).collect();
    out.resize(plan.length as usize, 0);
    Ok(out)
}

impl Cluster {
    pub fn field(&self) -> &PrimeField {
        &self.field
    }

    pub fn plan(&self) -> &StoragePlan {
        &self.plan
    }

    pub fn constants(&self) -> &ConstantsPool {
        &self.constants
    }

    pub fn layout(&self) -> &[ClassLayout] {
        &self.layout
    }

    pub fn databases(&self) -> &[DatabaseState] {
        &self.databases
    }

    /// Sessions run so far, read-only ones included.
    pub fn sessions(&self) -> u64 {
        self.sessions
    }

    /// Checks occupancy against capacity and that every partition is stored
    /// on exactly its members.
    pub fn audit(&self) -> Result<()> {
        for db in &self.databases {
            if db.occupancy() != db.capacity {
                return Err(Error::ProtocolViolation(format!(
                    "database {} stores {} symbols, capacity {}",
                    db.index,
                    db.occupancy(),
                    db.capacity
                )));
            }
        }
        for (c, class) in self.layout.iter().enumerate() {
            for (p, part) in class.partitions.iter().enumerate() {
                for db in &self.databases {
                    let member = part.members.contains(&db.index);
                    let count = db.shares.get(&(c, p)).map_or(0, Vec::len);
                    if count != if member { part.subpackets } else { 0 } {
                        return Err(Error::ProtocolViolation(format!(
                            "database {} holds {count} subpackets of class {c} partition {p}",
                            db.index
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    fn check_theta(&self, theta: usize) -> Result<()> {
        if theta >= self.plan.submodels as usize {
            return Err(Error::ProtocolViolation(format!(
                "submodel {theta} out of range for {} submodels",
                self.plan.submodels
            )));
        }
        Ok(())
    }

    /// Sends fresh read queries for `theta` to every holder of every class and
    /// downloads the answers. Returns the padded submodel.
    fn read_phase<R: Rng + ?Sized>(
        &mut self,
        session: u64,
        theta: usize,
        ledger: &mut SessionLedger,
        rng: &mut R,
    ) -> Result<Vec<u64>> {
        let m = self.plan.submodels as usize;
        let mut out = vec![0u64; self.plan.length as usize];
        for (c, class) in self.layout.iter().enumerate() {
            let geom = &class.geometry;
            let grid = &self.constants.grids[c];
            let holders = class.holders();
            let alphas: Vec<u64> = holders.iter().map(|&n| self.databases[n].alpha).collect();
            let noise = QueryNoise::random(&self.field, m, geom, rng);
            let queries = gen_read_queries(&self.field, geom, grid, &alphas, m, theta, &noise)?;
            for (&n, q) in holders.iter().zip(queries) {
                ledger.classes[c].query_uploaded += q.slots.iter().map(|s| s.len() as u64).sum::<u64>();
                self.databases[n].receive_queries(session, c, q.slots);
            }
            for (p, part) in class.partitions.iter().enumerate() {
                let reader_alphas: Vec<u64> = part.readers.iter().map(|&n| self.databases[n].alpha).collect();
                let decoder = Decoder::new(&self.field, geom, grid, &reader_alphas)?;
                for s in 0..part.subpackets {
                    let answers: Vec<Vec<u64>> = part
                        .readers
                        .iter()
                        .map(|&n| self.databases[n].answer(&self.field, session, c, p, s))
                        .collect::<Result<_>>()?;
                    ledger.classes[c].downloaded += answers.iter().map(|a| a.len() as u64).sum::<u64>();
                    let start = part.offset + s * geom.block();
                    out[start..start + geom.block()].copy_from_slice(&decoder.decode(&self.field, &answers)?);
                }
            }
        }
        Ok(out)
    }

    /// Uploads the combined updates of `delta` and applies the resulting
    /// increments. All increments are computed before any share changes.
    fn write_phase<R: Rng + ?Sized>(
        &mut self,
        session: u64,
        delta: &[u64],
        ledger: &mut SessionLedger,
        rng: &mut R,
    ) -> Result<()> {
        let mut staged: Vec<(usize, usize, usize, usize, Vec<u64>)> = Vec::new();
        for (c, class) in self.layout.iter().enumerate() {
            let geom = &class.geometry;
            let grid = &self.constants.grids[c];
            for (p, part) in class.partitions.iter().enumerate() {
                let alphas: Vec<u64> = part.members.iter().map(|&n| self.databases[n].alpha).collect();
                for s in 0..part.subpackets {
                    let start = part.offset + s * geom.block();
                    let noise = UpdateNoise::random(&self.field, geom, rng);
                    let updates =
                        gen_write_updates(&self.field, geom, grid, &alphas, &delta[start..start + geom.block()], &noise)?;
                    for (&n, u) in part.members.iter().zip(updates) {
                        ledger.classes[c].uploaded += u.len() as u64;
                        let inc = self.databases[n].increment(&self.field, session, c, geom, grid, &u)?;
                        staged.push((n, c, p, s, inc));
                    }
                }
            }
        }
        for (n, c, p, s, inc) in staged {
            let share = &mut self.databases[n].shares.get_mut(&(c, p)).expect("staged share exists")[s];
            for (v, d) in share.iter_mut().zip(inc) {
                *v = self.field.add(*v, d);
            }
        }
        Ok(())
    }

    fn new_ledger(&self) -> SessionLedger {
        SessionLedger::new(&self.plan, &self.layout)
    }

    /// Full read-update-write session for submodel `theta` (zero-based).
    ///
    /// `delta` has the requested or the padded length. The returned submodel
    /// is the one read before the update. Databases are left untouched if the
    /// session fails.
    pub fn run_session<R: Rng + ?Sized>(&mut self, theta: usize, delta: &[u64], rng: &mut R) -> Result<SessionOutcome> {
        self.check_theta(theta)?;
        let delta = pad_row(&self.field, &self.plan, delta)?;
        let backup = self.databases.clone();
        let session = self.sessions;
        self.sessions += 1;
        let mut ledger = self.new_ledger();
        let result = self
            .read_phase(session, theta, &mut ledger, rng)
            .and_then(|read| self.write_phase(session, &delta, &mut ledger, rng).map(|()| read));
        match result {
            Ok(mut recovered) => {
                recovered.truncate(self.plan.requested_length as usize);
                Ok(SessionOutcome { recovered, ledger })
            }
            Err(e) => {
                self.databases = backup;
                Err(e)
            }
        }
    }

    /// Private read of submodel `theta` without a write phase.
    pub fn read_submodel<R: Rng + ?Sized>(&mut self, theta: usize, rng: &mut R) -> Result<SessionOutcome> {
        self.check_theta(theta)?;
        let session = self.sessions;
        self.sessions += 1;
        let mut ledger = self.new_ledger();
        let mut recovered = self.read_phase(session, theta, &mut ledger, rng)?;
        recovered.truncate(self.plan.requested_length as usize);
        Ok(SessionOutcome { recovered, ledger })
    }

    /// Privately reads every submodel and compares it with `oracle`.
    pub fn verify_against<R: Rng + ?Sized>(&mut self, oracle: &PlainOracle, rng: &mut R) -> Result<bool> {
        for m in 0..self.plan.submodels as usize {
            let got = self.read_submodel(m, rng)?.recovered;
            if got.as_slice() != &oracle.submodel(m)[..got.len()] {
                return Ok(false);
            }
        }
        Ok(true)
    }
}
