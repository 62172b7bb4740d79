use crate::model::ClassMix;
use crate::Minutes;

use super::WorkloadError;

/// Parameters of a synthetic workload. Defaults are the base experiment:
/// 1000 tasks, 10000 VUs, 70/20/10 SRT/MRT/LRT with means 120/200/400 min,
/// 10% VU outliers and price coefficients 3 and 10000. Both streams arrive
/// over one simulated week.
#[derive(Debug, Clone, PartialEq)]
pub struct WorkloadConfig {
    pub num_tasks: u32,
    pub num_vus: u32,
    pub class_mix: ClassMix,
    pub mean_exec_min: f64,
    pub max_exec_min: Minutes,
    /// Laxity is `laxity_exec_fraction · e + U[laxity_extra_lo, laxity_extra_hi]`.
    pub laxity_exec_fraction: f64,
    pub laxity_extra_lo: f64,
    pub laxity_extra_hi: f64,
    pub k1: f64,
    pub k2: f64,
    pub vu_outlier_fraction: f64,
    pub outlier_stay_factor_lo: f64,
    pub outlier_stay_factor_hi: f64,
    pub task_outlier_fraction: f64,
    pub task_outlier_exec_lo: f64,
    pub task_outlier_exec_hi: f64,
    /// Tasks arrive as a Poisson process with rate `num_tasks / task_window_min`.
    pub task_window_min: f64,
    /// VUs arrive as a Poisson process with rate `num_vus / vu_window_min`.
    pub vu_window_min: f64,
    pub config_time_min: Minutes,
    pub seed: u64,
}

impl Default for WorkloadConfig {
    fn default() -> Self {
        Self {
            num_tasks: 1000,
            num_vus: 10_000,
            class_mix: ClassMix::default(),
            mean_exec_min: 1000.0,
            max_exec_min: 5000,
            laxity_exec_fraction: 0.1,
            laxity_extra_lo: 100.0,
            laxity_extra_hi: 5000.0,
            k1: 3.0,
            k2: 10_000.0,
            vu_outlier_fraction: 0.10,
            outlier_stay_factor_lo: 0.25,
            outlier_stay_factor_hi: 2.5,
            task_outlier_fraction: 0.02,
            task_outlier_exec_lo: 3000.0,
            task_outlier_exec_hi: 5000.0,
            task_window_min: 10_080.0,
            vu_window_min: 10_080.0,
            config_time_min: 5,
            seed: 1,
        }
    }
}

impl WorkloadConfig {
    pub fn task_arrival_rate(&self) -> f64 {
        self.num_tasks as f64 / self.task_window_min
    }

    pub fn vu_arrival_rate(&self) -> f64 {
        self.num_vus as f64 / self.vu_window_min
    }

    pub fn validate(&self) -> Result<(), WorkloadError> {
        let fail = |m: &str| Err(WorkloadError::Config(m.to_string()));
        self.class_mix.validate()?;
        if !(self.task_window_min > 0.0 && self.vu_window_min > 0.0) {
            return fail("arrival windows must be positive");
        }
        if !(self.mean_exec_min > 0.0) || self.max_exec_min < 1 {
            return fail("execution time parameters must be positive");
        }
        for (name, f) in
            [("vu_outlier_fraction", self.vu_outlier_fraction), ("task_outlier_fraction", self.task_outlier_fraction)]
        {
            if !(0.0..=1.0).contains(&f) {
                return Err(WorkloadError::Config(format!("{name} must lie in [0, 1]")));
            }
        }
        if !(self.laxity_extra_lo > 0.0 && self.laxity_extra_lo <= self.laxity_extra_hi)
            || self.laxity_exec_fraction < 0.0
        {
            return fail("laxity range must be positive and ordered");
        }
        if !(self.outlier_stay_factor_lo > 0.0 && self.outlier_stay_factor_lo <= self.outlier_stay_factor_hi) {
            return fail("outlier stay factors must be positive and ordered");
        }
        if !(self.task_outlier_exec_lo >= 1.0 && self.task_outlier_exec_lo <= self.task_outlier_exec_hi) {
            return fail("outlier execution range must be ordered and at least one minute");
        }
        if self.k1 < 0.0 || self.k2 < 0.0 {
            return fail("price coefficients must be non-negative");
        }
        Ok(())
    }
}
