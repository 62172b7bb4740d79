//! Domain types shared by every other module.

use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Neg, Sub, SubAssign};
use std::str::FromStr;

use thiserror::Error;

/// Simulated time, in whole minutes.
pub type Minutes = u64;
pub type VuId = u32;
pub type TaskId = u32;

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("unknown VU class `{0}`")]
    UnknownClass(String),
    #[error("class mix invalid: {0}")]
    InvalidMix(String),
    #[error("invalid vehicular unit {id}: {reason}")]
    InvalidVu { id: VuId, reason: &'static str },
    #[error("invalid task {id}: {reason}")]
    InvalidTask { id: TaskId, reason: &'static str },
    #[error("money value `{0}` is not a decimal with at most 3 fractional digits")]
    BadMoney(String),
}

/// Residency class of a vehicular unit.
///
/// Ordered by expected residency: `Srt < Mrt < Lrt`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum VuClass {
    Srt,
    Mrt,
    Lrt,
}

impl VuClass {
    pub const ALL: [VuClass; 3] = [VuClass::Srt, VuClass::Mrt, VuClass::Lrt];

    pub fn tag(self) -> &'static str {
        match self {
            VuClass::Srt => "SRT",
            VuClass::Mrt => "MRT",
            VuClass::Lrt => "LRT",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn default_mean_residency_min(self) -> f64 {
        match self {
            VuClass::Srt => 120.0,
            VuClass::Mrt => 200.0,
            VuClass::Lrt => 400.0,
        }
    }

    pub fn default_share(self) -> f64 {
        match self {
            VuClass::Srt => 0.70,
            VuClass::Mrt => 0.20,
            VuClass::Lrt => 0.10,
        }
    }

    /// Classes strictly more reliable than `self`, nearest first.
    pub fn better(self) -> &'static [VuClass] {
        match self {
            VuClass::Srt => &[VuClass::Mrt, VuClass::Lrt],
            VuClass::Mrt => &[VuClass::Lrt],
            VuClass::Lrt => &[],
        }
    }
}

impl fmt::Display for VuClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for VuClass {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().as_str() {
            "SRT" => Ok(VuClass::Srt),
            "MRT" => Ok(VuClass::Mrt),
            "LRT" => Ok(VuClass::Lrt),
            _ => Err(ModelError::UnknownClass(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassProfile {
    pub class: VuClass,
    pub mean_residency_min: f64,
    pub population_share: f64,
}

impl ClassProfile {
    /// Departure rate per minute.
    pub fn lambda(&self) -> f64 {
        1.0 / self.mean_residency_min
    }
}

/// Residency profile of all three classes, indexed by [`VuClass::index`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassMix {
    profiles: [ClassProfile; 3],
}

impl Default for ClassMix {
    fn default() -> Self {
        Self::new(
            [120.0, 200.0, 400.0],
            [VuClass::Srt.default_share(), VuClass::Mrt.default_share(), VuClass::Lrt.default_share()],
        )
        .expect("default mix is valid")
    }
}

impl ClassMix {
    pub fn new(means: [f64; 3], shares: [f64; 3]) -> Result<Self, ModelError> {
        let profiles = [0, 1, 2].map(|i| ClassProfile {
            class: VuClass::ALL[i],
            mean_residency_min: means[i],
            population_share: shares[i],
        });
        let mix = Self { profiles };
        mix.validate()?;
        Ok(mix)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let mut total = 0.0;
        for p in &self.profiles {
            if !(p.mean_residency_min > 0.0) {
                return Err(ModelError::InvalidMix(format!("{} mean residency must be positive", p.class)));
            }
            if !(0.0..=1.0).contains(&p.population_share) {
                return Err(ModelError::InvalidMix(format!("{} share outside [0, 1]", p.class)));
            }
            total += p.population_share;
        }
        if (total - 1.0).abs() > 1e-9 {
            return Err(ModelError::InvalidMix(format!("shares sum to {total}, expected 1")));
        }
        let [s, m, l] = self.profiles.map(|p| p.mean_residency_min);
        if !(s < m && m < l) {
            return Err(ModelError::InvalidMix("mean residency must satisfy SRT < MRT < LRT".into()));
        }
        Ok(())
    }

    pub fn profile(&self, class: VuClass) -> &ClassProfile {
        &self.profiles[class.index()]
    }

    pub fn profiles(&self) -> &[ClassProfile; 3] {
        &self.profiles
    }

    /// The same mix with every mean residency multiplied by `factor`.
    pub fn scaled_residency(&self, factor: f64) -> Self {
        let mut out = *self;
        for p in &mut out.profiles {
            p.mean_residency_min *= factor;
        }
        out
    }

    /// A population made only of `class`. Ordering of the means is kept.
    pub fn single_class(&self, class: VuClass) -> Self {
        let mut out = *self;
        for p in &mut out.profiles {
            p.population_share = if p.class == class { 1.0 } else { 0.0 };
        }
        out
    }
}

/// Fixed-point currency amount with three decimal places.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Money(i64);

impl Money {
    pub const ZERO: Money = Money(0);
    const SCALE: i64 = 1000;

    pub const fn from_milli(milli: i64) -> Self {
        Money(milli)
    }

    pub const fn from_units(units: i64) -> Self {
        Money(units * Self::SCALE)
    }

    /// Rounds to the nearest thousandth.
    pub fn from_f64(value: f64) -> Self {
        Money((value * Self::SCALE as f64).round() as i64)
    }

    pub fn milli(self) -> i64 {
        self.0
    }

    pub fn as_f64(self) -> f64 {
        self.0 as f64 / Self::SCALE as f64
    }

    pub fn times(self, factor: u64) -> Money {
        Money(self.0 * factor as i64)
    }
}

impl fmt::Display for Money {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if self.0 < 0 { "-" } else { "" };
        let abs = self.0.unsigned_abs();
        write!(f, "{sign}{}.{:03}", abs / 1000, abs % 1000)
    }
}

impl FromStr for Money {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || ModelError::BadMoney(s.to_string());
        let t = s.trim();
        let (neg, body) = match t.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, t),
        };
        let (int, frac) = body.split_once('.').unwrap_or((body, ""));
        if int.is_empty()
            || frac.len() > 3
            || !int.bytes().all(|b| b.is_ascii_digit())
            || !frac.bytes().all(|b| b.is_ascii_digit())
        {
            return Err(bad());
        }
        let int: i64 = int.parse().map_err(|_| bad())?;
        let mut frac_val: i64 = if frac.is_empty() { 0 } else { frac.parse().map_err(|_| bad())? };
        for _ in frac.len()..3 {
            frac_val *= 10;
        }
        let v = int * 1000 + frac_val;
        Ok(Money(if neg { -v } else { v }))
    }
}

impl Add for Money {
    type Output = Money;
    fn add(self, rhs: Money) -> Money {
        Money(self.0 + rhs.0)
    }
}

impl Sub for Money {
    type Output = Money;
    fn sub(self, rhs: Money) -> Money {
        Money(self.0 - rhs.0)
    }
}

impl Neg for Money {
    type Output = Money;
    fn neg(self) -> Money {
        Money(-self.0)
    }
}

impl AddAssign for Money {
    fn add_assign(&mut self, rhs: Money) {
        self.0 += rhs.0;
    }
}

impl SubAssign for Money {
    fn sub_assign(&mut self, rhs: Money) {
        self.0 -= rhs.0;
    }
}

impl Sum for Money {
    fn sum<I: Iterator<Item = Money>>(iter: I) -> Money {
        iter.fold(Money::ZERO, Add::add)
    }
}

/// Cost of running `n` VUs for `exec_min` minutes at `k` per VU-minute.
pub fn task_cost(n: u32, exec_min: Minutes, k: Money) -> Money {
    k.times(n as u64 * exec_min)
}

pub fn task_profit(revenue: Money, total_cost: Money) -> Money {
    revenue - total_cost
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VuState {
    Configuring,
    Idle,
    Executing(TaskId),
    Departed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VehicularUnit {
    pub id: VuId,
    pub class: VuClass,
    pub arrival_min: Minutes,
    pub declared_stay_min: Minutes,
    pub actual_departure_min: Minutes,
    pub config_done_min: Minutes,
    pub state: VuState,
}

impl VehicularUnit {
    pub fn new(
        id: VuId,
        class: VuClass,
        arrival_min: Minutes,
        declared_stay_min: Minutes,
        actual_departure_min: Minutes,
        config_time_min: Minutes,
    ) -> Result<Self, ModelError> {
        if actual_departure_min <= arrival_min {
            return Err(ModelError::InvalidVu { id, reason: "departure must follow arrival" });
        }
        Ok(Self {
            id,
            class,
            arrival_min,
            declared_stay_min,
            actual_departure_min,
            config_done_min: arrival_min + config_time_min,
            state: VuState::Configuring,
        })
    }

    /// A VU that leaves before its VM is configured never takes work.
    pub fn is_usable(&self) -> bool {
        self.actual_departure_min > self.config_done_min
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TaskStatus {
    Queued,
    Rejected,
    Running,
    FailedPendingRetry,
    Completed,
    Discarded,
}

impl TaskStatus {
    pub fn is_terminal(self) -> bool {
        matches!(self, TaskStatus::Rejected | TaskStatus::Completed | TaskStatus::Discarded)
    }

    /// Allowed lifecycle edges.
    pub fn can_transition_to(self, next: TaskStatus) -> bool {
        use TaskStatus::*;
        matches!(
            (self, next),
            (Queued, Rejected)
                | (Queued, Running)
                | (Queued, Discarded)
                | (Running, Running)
                | (Running, FailedPendingRetry)
                | (Running, Completed)
                | (Running, Discarded)
                | (FailedPendingRetry, Running)
                | (FailedPendingRetry, Discarded)
        )
    }
}

/// How a task is laid out on VUs: class, redundancy per group and the
/// number of sequential checkpoints over the work still outstanding.
#[derive(Debug, Clone, PartialEq)]
pub struct ExecutionPlan {
    /// `None` for class-blind allocation (baseline).
    pub vu_type: Option<VuClass>,
    pub redundancy: u32,
    pub checkpoints: u32,
    /// Length of the next checkpoint. Every checkpoint but the last has this
    /// length; the last one absorbs the rounding remainder.
    pub checkpoint_len_min: Minutes,
    pub current_checkpoint: u32,
    pub persisted_progress_min: Minutes,
    /// Outcome of the literal `g * x <= available` guard, kept for reporting.
    pub product_guard_ok: bool,
}

impl ExecutionPlan {
    /// Length of checkpoint `index` (0-based) when `work` minutes are split
    /// into `self.checkpoints` pieces.
    pub fn checkpoint_len(&self, index: u32, work: Minutes) -> Minutes {
        if index + 1 < self.checkpoints {
            self.checkpoint_len_min
        } else {
            work.saturating_sub(self.checkpoint_len_min * (self.checkpoints as u64 - 1))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Task {
    pub id: TaskId,
    pub arrival_min: Minutes,
    pub exec_min: Minutes,
    pub deadline_min: Minutes,
    pub revenue: Money,
    pub remaining_exec_min: Minutes,
    pub critical: bool,
    pub plan: Option<ExecutionPlan>,
    pub status: TaskStatus,
}

impl Task {
    pub fn new(
        id: TaskId,
        arrival_min: Minutes,
        exec_min: Minutes,
        deadline_min: Minutes,
        revenue: Money,
    ) -> Result<Self, ModelError> {
        if exec_min == 0 {
            return Err(ModelError::InvalidTask { id, reason: "execution time must be positive" });
        }
        if revenue < Money::ZERO {
            return Err(ModelError::InvalidTask { id, reason: "revenue must be non-negative" });
        }
        Ok(Self {
            id,
            arrival_min,
            exec_min,
            deadline_min,
            revenue,
            remaining_exec_min: exec_min,
            critical: false,
            plan: None,
            status: TaskStatus::Queued,
        })
    }

    /// `d - a - e`; negative for tasks that were infeasible on arrival.
    pub fn laxity_min(&self) -> i64 {
        self.deadline_min as i64 - self.arrival_min as i64 - self.exec_min as i64
    }

    pub fn persisted_min(&self) -> Minutes {
        self.exec_min - self.remaining_exec_min
    }

    pub fn set_status(&mut self, next: TaskStatus) -> Result<(), ModelError> {
        if !self.status.can_transition_to(next) {
            return Err(ModelError::InvalidTask { id: self.id, reason: "illegal status transition" });
        }
        self.status = next;
        Ok(())
    }
}
