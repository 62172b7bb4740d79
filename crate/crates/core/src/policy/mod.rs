//! Admission-side decisions: task criticality, queue ordering, checkpoint
//! splitting against the MT99R table, VU-class selection with a reserved LRT
//! pool, and the acceptance scan. Everything here is a pure function of a
//! snapshot handed over by the engine.

mod accept;
mod order;
mod split;

pub use accept::{accept_task, Decision, IdleCounts, VcSnapshot};
pub use order::{order_tasks, Heuristic, OrderedQueue};
pub use split::{plan_for, reserve_target, sota_plan, split_task, vu_requirement};

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::model::Task;
use crate::reliability::Lut;
use crate::{Minutes, Money, VuClass};

#[derive(Debug, Error, PartialEq)]
pub enum PolicyError {
    #[error("invalid policy configuration: {0}")]
    Config(String),
    #[error("unknown ordering heuristic `{0}`")]
    UnknownHeuristic(String),
    #[error("unknown mode `{0}`")]
    UnknownMode(String),
    #[error("LUT has no entry for {class} with n = {n}")]
    MissingLut { class: VuClass, n: u32 },
}

/// Proposed scheduler versus the fixed-redundancy, class-blind baseline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Mode {
    Proposed,
    Sota,
}

impl Mode {
    pub fn tag(self) -> &'static str {
        match self {
            Mode::Proposed => "proposed",
            Mode::Sota => "sota",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Mode {
    type Err = PolicyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "proposed" => Ok(Mode::Proposed),
            "sota" => Ok(Mode::Sota),
            _ => Err(PolicyError::UnknownMode(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolicyConfig {
    pub delta: f64,
    /// Tasks shorter than this are critical regardless of laxity.
    pub e_threshold_critical_min: Minutes,
    pub heuristic: Heuristic,
    /// `(n_min, n_max)` indexed by [`VuClass::index`].
    pub bounds: [(u32, u32); 3],
    pub reserved_lrt_fraction: f64,
    /// Price of one VU-minute.
    pub k: Money,
    pub scan_period_min: Minutes,
    pub mode: Mode,
    /// Redundancy used by the baseline.
    pub sota_redundancy: u32,
    /// Smoothing factor for the LRT arrival-rate estimate behind `T_VU`.
    pub lrt_rate_alpha: f64,
    /// Window over which LRT arrivals are counted for `T_VU`.
    pub reserve_window_min: Minutes,
}

impl Default for PolicyConfig {
    fn default() -> Self {
        Self {
            delta: 0.1,
            e_threshold_critical_min: 200,
            heuristic: Heuristic::Ep,
            bounds: [(3, 5), (2, 4), (2, 3)],
            reserved_lrt_fraction: 0.10,
            k: Money::from_units(1),
            scan_period_min: 5,
            mode: Mode::Proposed,
            sota_redundancy: 3,
            lrt_rate_alpha: 0.1,
            reserve_window_min: 400,
        }
    }
}

impl PolicyConfig {
    pub fn bounds(&self, class: VuClass) -> (u32, u32) {
        self.bounds[class.index()]
    }

    /// Label used in reports, e.g. `proposed-EP`.
    pub fn label(&self) -> String {
        format!("{}-{}", self.mode, self.heuristic)
    }

    pub fn validate(&self) -> Result<(), PolicyError> {
        let fail = |m: String| Err(PolicyError::Config(m));
        if !(self.delta >= 0.0) {
            return fail(format!("delta must be non-negative, got {}", self.delta));
        }
        for class in VuClass::ALL {
            let (lo, hi) = self.bounds(class);
            if lo == 0 || lo > hi {
                return fail(format!("{class} bounds must satisfy 1 <= n_min <= n_max, got {lo}..{hi}"));
            }
        }
        if !(0.0..=1.0).contains(&self.reserved_lrt_fraction) {
            return fail("reserved_lrt_fraction must lie in [0, 1]".into());
        }
        if self.k < Money::ZERO {
            return fail("k must be non-negative".into());
        }
        if self.scan_period_min == 0 {
            return fail("scan period must be at least one minute".into());
        }
        if self.sota_redundancy == 0 {
            return fail("baseline redundancy must be at least one".into());
        }
        if !(self.lrt_rate_alpha > 0.0 && self.lrt_rate_alpha <= 1.0) {
            return fail("lrt_rate_alpha must lie in (0, 1]".into());
        }
        Ok(())
    }

    /// Fails if the table lacks a cell the allocator may ask for.
    pub fn check_lut(&self, lut: &Lut) -> Result<(), PolicyError> {
        if self.mode == Mode::Sota {
            return Ok(());
        }
        for class in VuClass::ALL {
            let (lo, hi) = self.bounds(class);
            if let Some(n) = (lo..=hi).find(|&n| lut.get(class, n).is_none()) {
                return Err(PolicyError::MissingLut { class, n });
            }
        }
        Ok(())
    }
}

/// Critical when laxity is under `δ · e` of slack, i.e. `l < (1 + δ)·e`, or
/// when the task is short.
pub fn classify_task(task: &Task, cfg: &PolicyConfig) -> bool {
    let e = task.exec_min as f64;
    (task.laxity_min() as f64) < (1.0 + cfg.delta) * e || task.exec_min < cfg.e_threshold_critical_min
}
