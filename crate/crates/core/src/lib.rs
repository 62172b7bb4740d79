//! Simulation and analysis toolkit for profit-maximizing, reliability-aware
//! task scheduling on a static vehicular cloud.
//!
//! The crate is split along the lines of the scheduling pipeline:
//!
//! * [`model`] holds the shared domain types and the cost/profit arithmetic.
//! * [`reliability`] builds the group-level absorbing Markov chain, derives
//!   failure CDFs, MTTF and MT99R, and tabulates the MT99R lookup table.
//! * [`workload`] generates synthetic vehicle and task streams and ingests
//!   parking traces.
//! * [`policy`] contains admission-side logic: classification, ordering,
//!   splitting, VU-type selection and the baseline planner.
//! * [`engine`] is the deterministic discrete-event simulator.

pub mod engine;
pub mod model;
pub mod policy;
pub mod reliability;
pub mod rng;
pub mod workload;

pub use model::{Minutes, Money, TaskId, VuClass, VuId};
