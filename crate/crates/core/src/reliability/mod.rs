//! Group-level reliability model for redundantly executed tasks.
//!
//! A task running on `n` VUs is in group `G_j` when `j` of them have left and
//! recruitment of replacements is under way. The chain tracks only group
//! membership; each recruiting group is unrolled into `t_mttr` one-step
//! substates so the failure CDF can be obtained by plain forward iteration.

mod cdf;
mod chain;
mod lut;
mod monte_carlo;

pub use cdf::{failure_cdf, mt99r, mttf, quantile_time, quantile_with_doubling, FailureCdf};
pub use chain::{build_chain, escalation_prob, ChainParams, ChainState, ReliabilityChain, DEFAULT_STATE_CAP};
pub use lut::{
    build_lut, calibrate_t_mttr, ClassRange, Lut, LutEntry, CALIBRATION_TARGET_MTTF, DEFAULT_T_MTTR, T_MTTR_CANDIDATES,
};
pub use monte_carlo::monte_carlo_failure_cdf;

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ReliabilityError {
    #[error("invalid chain parameters: {0}")]
    InvalidParams(String),
    #[error("departed count {j} has no recruitment step for n = {n}")]
    NoEscalation { j: u32, n: u32 },
    #[error("chain would need {states} states, above the cap of {cap}")]
    TooManyStates { states: usize, cap: usize },
    #[error("failure CDF reaches only {reached:.6} by {horizon} min, below q = {q}")]
    HorizonTooShort { horizon: u64, reached: f64, q: f64 },
    #[error("quantile must lie strictly between 0 and 1, got {0}")]
    BadQuantile(f64),
    #[error("LUT has no entry for {class} with n = {n}")]
    MissingEntry { class: crate::VuClass, n: u32 },
    #[error("LUT parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },
}
