//! Binary snapshot of a cluster's database states.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! magic "PRUWSNAP" | version u32 | q u64 | M u64 | L u64 | N u32 | sessions u64
//! alphas: N x u64
//! classes u32, then per class:
//!     K u32 | R u32 | y u32 | grid y*K x u64 | partitions u32
//!     per partition: subpackets u64 | members u32 | member indices u32...
//! per database: index u32 | capacity u64 | symbols u64, then the shares in
//!     (class, partition, subpacket) order, M*y symbols u64 each
//! ```
//!
//! Retained queries are session state and are not saved.

use std::collections::BTreeMap;
use std::path::Path;

use super::{layout_plan, Cluster, DatabaseState};
use crate::error::{Error, Result};
use crate::ffield::{ConstantGrid, ConstantsPool, PrimeField};
use crate::planner::StoragePlan;

const MAGIC: &[u8; 8] = b"PRUWSNAP";
const VERSION: u32 = 1;

fn put_u32(out: &mut Vec<u8>, v: u32) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn put_u64(out: &mut Vec<u8>, v: u64) {
    out.extend_from_slice(&v.to_le_bytes());
}

struct Reader<'a> {
    buf: &'a [u8],
}

impl Reader<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8]> {
        if self.buf.len() < n {
            return Err(Error::Snapshot("unexpected end of file".into()));
        }
        let (head, tail) = self.buf.split_at(n);
        self.buf = tail;
        Ok(head)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn expect_u64(&mut self, what: &str, want: u64) -> Result<()> {
        let got = self.u64()?;
        if got != want {
            return Err(Error::Snapshot(format!("{what} is {got}, plan expects {want}")));
        }
        Ok(())
    }

    fn expect_u32(&mut self, what: &str, want: u32) -> Result<()> {
        let got = self.u32()?;
        if got != want {
            return Err(Error::Snapshot(format!("{what} is {got}, plan expects {want}")));
        }
        Ok(())
    }
}

impl Cluster {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        put_u32(&mut out, VERSION);
        put_u64(&mut out, self.field.modulus());
        put_u64(&mut out, self.plan.submodels);
        put_u64(&mut out, self.plan.length);
        put_u32(&mut out, self.databases.len() as u32);
        put_u64(&mut out, self.sessions);
        for &a in &self.constants.alphas {
            put_u64(&mut out, a);
        }
        put_u32(&mut out, self.layout.len() as u32);
        for (class, grid) in self.layout.iter().zip(&self.constants.grids) {
            let g = class.geometry;
            put_u32(&mut out, g.k as u32);
            put_u32(&mut out, g.r as u32);
            put_u32(&mut out, g.y as u32);
            for &f in grid.values() {
                put_u64(&mut out, f);
            }
            put_u32(&mut out, class.partitions.len() as u32);
            for part in &class.partitions {
                put_u64(&mut out, part.subpackets as u64);
                put_u32(&mut out, part.members.len() as u32);
                for &m in &part.members {
                    put_u32(&mut out, m as u32);
                }
            }
        }
        for db in &self.databases {
            put_u32(&mut out, db.index as u32);
            put_u64(&mut out, db.capacity);
            put_u64(&mut out, db.occupancy());
            for shares in db.shares.values() {
                for share in shares {
                    for &v in share {
                        put_u64(&mut out, v);
                    }
                }
            }
        }
        out
    }

    /// Rebuilds a cluster for `plan` from [`Cluster::to_bytes`] output. The
    /// snapshot's geometry table must match the plan's layout.
    pub fn from_bytes(plan: &StoragePlan, bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { buf: bytes };
        if r.take(8)? != MAGIC {
            return Err(Error::Snapshot("bad magic".into()));
        }
        let version = r.u32()?;
        if version != VERSION {
            return Err(Error::Snapshot(format!("unsupported version {version}")));
        }
        let field = PrimeField::new(r.u64()?).map_err(|e| Error::Snapshot(e.to_string()))?;
        r.expect_u64("submodel count", plan.submodels)?;
        r.expect_u64("submodel length", plan.length)?;
        let n = plan.n();
        r.expect_u32("database count", n as u32)?;
        let sessions = r.u64()?;
        let alphas = (0..n).map(|_| r.u64()).collect::<Result<Vec<_>>>()?;

        let layout = layout_plan(plan)?;
        r.expect_u32("class count", layout.len() as u32)?;
        let mut grids = Vec::with_capacity(layout.len());
        for class in &layout {
            let g = class.geometry;
            r.expect_u32("class K", g.k as u32)?;
            r.expect_u32("class R", g.r as u32)?;
            r.expect_u32("class y", g.y as u32)?;
            let values = (0..g.block()).map(|_| r.u64()).collect::<Result<Vec<_>>>()?;
            grids.push(ConstantGrid::new(g.y, g.k, values));
            r.expect_u32("partition count", class.partitions.len() as u32)?;
            for part in &class.partitions {
                r.expect_u64("subpacket count", part.subpackets as u64)?;
                r.expect_u32("member count", part.members.len() as u32)?;
                for &m in &part.members {
                    r.expect_u32("member index", m as u32)?;
                }
            }
        }
        let constants = ConstantsPool { alphas, grids };
        constants.validate(&field).map_err(|e| Error::Snapshot(e.to_string()))?;

        let m = plan.submodels as usize;
        let mut databases = Vec::with_capacity(n);
        for index in 0..n {
            r.expect_u32("database index", index as u32)?;
            let capacity = r.u64()?;
            let occupancy = r.u64()?;
            let mut shares = BTreeMap::new();
            let mut read = 0u64;
            for (c, class) in layout.iter().enumerate() {
                let len = m * class.geometry.y;
                for (p, part) in class.partitions.iter().enumerate() {
                    if !part.members.contains(&index) {
                        continue;
                    }
                    let mut list = Vec::with_capacity(part.subpackets);
                    for _ in 0..part.subpackets {
                        let share = (0..len)
                            .map(|_| {
                                let v = r.u64()?;
                                if v >= field.modulus() {
                                    return Err(Error::Snapshot(format!("symbol {v} outside the field")));
                                }
                                Ok(v)
                            })
                            .collect::<Result<Vec<_>>>()?;
                        read += len as u64;
                        list.push(share);
                    }
                    shares.insert((c, p), list);
                }
            }
            if read != occupancy {
                return Err(Error::Snapshot(format!("database {index} records {occupancy} symbols, layout gives {read}")));
            }
            databases.push(DatabaseState {
                index,
                alpha: constants.alphas[index],
                capacity,
                shares,
                retained: BTreeMap::new(),
            });
        }
        if !r.buf.is_empty() {
            return Err(Error::Snapshot(format!("{} trailing bytes", r.buf.len())));
        }
        let cluster = Cluster { field, plan: plan.clone(), constants, layout, databases, sessions };
        cluster.audit().map_err(|e| Error::Snapshot(e.to_string()))?;
        Ok(cluster)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes()).map_err(|e| Error::Snapshot(format!("{}: {e}", path.display())))
    }

    pub fn load(plan: &StoragePlan, path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::Snapshot(format!("{}: {e}", path.display())))?;
        Self::from_bytes(plan, &bytes)
    }
}
