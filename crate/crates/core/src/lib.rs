//! Private read-update-write (PRUW) for federated submodel learning over
//! databases with heterogeneous storage constraints.
//!
//! - [`planner`] chooses the MDS code mixture, per-database allocations and
//!   replica partitions for a set of storage fractions.
//! - [`pruw`] is the per-subpacket read/write protocol of one code class.
//! - [`sim`] installs a plan on in-process databases, runs sessions, meters
//!   communication, and hosts the privacy probes.

pub mod error;
pub mod ffield;
pub mod planner;
pub mod pruw;
pub mod ratio;
pub mod sim;

pub use error::{Error, Result};
