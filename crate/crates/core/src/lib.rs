//! Fleet rebalancing for car sharing under uncertain daily demand.
//!
//! The pipeline runs bottom-up through the modules: [`ingest`] turns trip
//! records into daily demand series, [`density`] fits per-location laws and
//! samples integer scenario sets, [`model`] builds the deterministic and
//! two-stage formulations on top of the [`lp`] core, and [`saa`] and
//! [`benders`] solve them.

pub mod benders;
pub mod density;
pub mod error;
pub mod exec;
pub mod ingest;
pub mod lp;
pub mod model;
pub mod rng;
pub mod saa;

pub use error::{Error, Result};
pub use exec::Execution;

/// Taxi-zone identifier.
pub type ZoneId = u32;
