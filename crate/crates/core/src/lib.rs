//! Truck departure time (TDT) placement for middle-mile networks.
//!
//! The crate is `no_std` with `alloc`. It holds the network model, forward
//! propagation of departures into delivery promises, the objectives and
//! KPIs, constraint checking, and the solvers: greedy with local search,
//! random-key simulated annealing, and a constraint-programming search.
//! File formats, the CLI and threading live in the `tdt` crate.
#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod constraints;
pub mod cp;
pub mod error;
pub mod eval;
pub mod heuristics;
pub mod instance;
pub mod lop;
pub mod objective;
pub mod plan;
pub mod rko;
pub mod slot;

pub use error::{Error, Result};
pub use instance::{generate_instance, GeneratorConfig, Network, NetworkSpec};
pub use plan::{propagate, TdtPlan};
pub use slot::{Slot, SlotSet};
