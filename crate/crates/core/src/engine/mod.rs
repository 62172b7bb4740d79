//! Deterministic discrete-event simulation of one availability zone.

mod event;
mod report;
mod sim;

pub use report::{PairedComparison, ProfitSummary, SimReport, TaskOutcome};

use thiserror::Error;

use crate::policy::{PolicyConfig, PolicyError};
use crate::reliability::{Lut, DEFAULT_T_MTTR};
use crate::workload::{TaskTrace, VuTrace};
use crate::Minutes;

#[derive(Debug, Error, PartialEq)]
pub enum EngineError {
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error("{0} trace is not sorted by arrival")]
    Unsorted(&'static str),
    #[error("{0} ids must equal their position in the trace")]
    Ids(&'static str),
    #[error("invalid simulation configuration: {0}")]
    Config(String),
    #[error("invariant violated at t = {time}: {msg}")]
    Invariant { time: Minutes, msg: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub policy: PolicyConfig,
    /// Delay between a departure and the replacement joining the group.
    pub t_mttr_min: Minutes,
    /// VUs are spread over VCs by `id % num_vcs`.
    pub num_vcs: u32,
    /// Defaults to the latest deadline plus one day.
    pub horizon_min: Option<Minutes>,
    /// Per-VU execution speed drawn from `U[0.9, 1.1]` instead of 1.
    pub speed_variation: bool,
    pub record_events: bool,
    /// Re-checks zone invariants after every event; for tests.
    pub check_invariants: bool,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            policy: PolicyConfig::default(),
            t_mttr_min: DEFAULT_T_MTTR as Minutes,
            num_vcs: 1,
            horizon_min: None,
            speed_variation: false,
            record_events: false,
            check_invariants: false,
            seed: 1,
        }
    }
}

/// Runs one simulation to the horizon.
pub fn run(vus: &VuTrace, tasks: &TaskTrace, cfg: &SimConfig, lut: &Lut) -> Result<SimReport, EngineError> {
    cfg.policy.validate()?;
    cfg.policy.check_lut(lut)?;
    if cfg.num_vcs == 0 {
        return Err(EngineError::Config("at least one VC is required".into()));
    }
    if cfg.t_mttr_min == 0 {
        return Err(EngineError::Config("t_mttr must be at least one minute".into()));
    }
    if !vus.is_sorted() {
        return Err(EngineError::Unsorted("VU"));
    }
    if !tasks.is_sorted() {
        return Err(EngineError::Unsorted("task"));
    }
    if vus.vus.iter().enumerate().any(|(i, v)| v.id as usize != i) {
        return Err(EngineError::Ids("VU"));
    }
    if tasks.tasks.iter().enumerate().any(|(i, t)| t.id as usize != i) {
        return Err(EngineError::Ids("task"));
    }
    sim::Sim::new(vus, tasks, cfg, lut).run()
}
