//! Run configuration file: TOML sections `[workload]`, `[policy]`,
//! `[reliability]`, `[run]` and `[sweep]`. Every key is optional and falls
//! back to the base experiment; unknown keys are rejected.

use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use serde::Deserialize;

use vcsim_core::engine::SimConfig;
use vcsim_core::model::ClassMix;
use vcsim_core::policy::{Heuristic, Mode, PolicyConfig};
use vcsim_core::reliability::{ClassRange, DEFAULT_T_MTTR};
use vcsim_core::workload::WorkloadConfig;
use vcsim_core::{Minutes, Money, VuClass};

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub workload: WorkloadSection,
    pub policy: PolicySection,
    pub reliability: ReliabilitySection,
    pub run: RunSection,
    pub sweep: SweepSection,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WorkloadSection {
    pub num_tasks: u32,
    pub num_vus: u32,
    /// SRT, MRT, LRT.
    pub mean_residency_min: [f64; 3],
    pub class_shares: [f64; 3],
    pub mean_exec_min: f64,
    pub max_exec_min: Minutes,
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
    pub task_window_min: f64,
    pub vu_window_min: f64,
    pub config_time_min: Minutes,
    /// Pre-made traces in the `gen` output format.
    pub vu_trace: Option<PathBuf>,
    pub task_trace: Option<PathBuf>,
    /// Parking occupancy trace to expand into VUs instead of generating them.
    pub parking_trace: Option<PathBuf>,
}

impl Default for WorkloadSection {
    fn default() -> Self {
        let w = WorkloadConfig::default();
        let p = w.class_mix.profiles();
        Self {
            num_tasks: w.num_tasks,
            num_vus: w.num_vus,
            mean_residency_min: p.map(|c| c.mean_residency_min),
            class_shares: p.map(|c| c.population_share),
            mean_exec_min: w.mean_exec_min,
            max_exec_min: w.max_exec_min,
            laxity_exec_fraction: w.laxity_exec_fraction,
            laxity_extra_lo: w.laxity_extra_lo,
            laxity_extra_hi: w.laxity_extra_hi,
            k1: w.k1,
            k2: w.k2,
            vu_outlier_fraction: w.vu_outlier_fraction,
            outlier_stay_factor_lo: w.outlier_stay_factor_lo,
            outlier_stay_factor_hi: w.outlier_stay_factor_hi,
            task_outlier_fraction: w.task_outlier_fraction,
            task_outlier_exec_lo: w.task_outlier_exec_lo,
            task_outlier_exec_hi: w.task_outlier_exec_hi,
            task_window_min: w.task_window_min,
            vu_window_min: w.vu_window_min,
            config_time_min: w.config_time_min,
            vu_trace: None,
            task_trace: None,
            parking_trace: None,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PolicySection {
    pub delta: f64,
    pub e_threshold_critical_min: Minutes,
    pub srt_bounds: [u32; 2],
    pub mrt_bounds: [u32; 2],
    pub lrt_bounds: [u32; 2],
    pub reserved_lrt_fraction: f64,
    /// Price of one VU-minute.
    pub k: f64,
    pub scan_period_min: Minutes,
    pub sota_redundancy: u32,
    pub lrt_rate_alpha: f64,
    pub reserve_window_min: Minutes,
    pub num_vcs: u32,
    pub speed_variation: bool,
    pub horizon_min: Option<Minutes>,
}

impl Default for PolicySection {
    fn default() -> Self {
        let p = PolicyConfig::default();
        let s = SimConfig::default();
        let b = |c: VuClass| {
            let (lo, hi) = p.bounds(c);
            [lo, hi]
        };
        Self {
            delta: p.delta,
            e_threshold_critical_min: p.e_threshold_critical_min,
            srt_bounds: b(VuClass::Srt),
            mrt_bounds: b(VuClass::Mrt),
            lrt_bounds: b(VuClass::Lrt),
            reserved_lrt_fraction: p.reserved_lrt_fraction,
            k: p.k.as_f64(),
            scan_period_min: p.scan_period_min,
            sota_redundancy: p.sota_redundancy,
            lrt_rate_alpha: p.lrt_rate_alpha,
            reserve_window_min: p.reserve_window_min,
            num_vcs: s.num_vcs,
            speed_variation: s.speed_variation,
            horizon_min: s.horizon_min,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReliabilitySection {
    pub t_mttr_min: u32,
    /// Quantile tabulated by `lut` and used for splitting.
    pub q: f64,
    /// Precomputed LUT for base-residency runs.
    pub lut: Option<PathBuf>,
    /// Sampling step of the CDF dumps.
    pub cdf_step_min: Minutes,
    /// CDF dumps stop once the failure probability passes this level.
    pub cdf_until: f64,
}

impl Default for ReliabilitySection {
    fn default() -> Self {
        Self { t_mttr_min: DEFAULT_T_MTTR, q: 0.01, lut: None, cdf_step_min: 10, cdf_until: 0.99 }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    /// First seed; replication `i` uses `seed + i`.
    pub seed: u64,
    pub replications: u32,
    pub modes: Vec<String>,
    pub orderings: Vec<String>,
    pub out: PathBuf,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            seed: 1,
            replications: 20,
            modes: vec!["proposed".into()],
            orderings: vec!["EP".into()],
            out: PathBuf::from("out"),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub task_counts: Vec<u32>,
    pub vu_counts: Vec<u32>,
    /// Multipliers of the base mean execution time (and its cap).
    pub exec_multipliers: Vec<f64>,
    /// Multipliers of every class's mean residency.
    pub residency_multipliers: Vec<f64>,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            task_counts: vec![1000, 2000, 3000],
            vu_counts: vec![2000, 4000, 6000, 8000, 10_000],
            exec_multipliers: vec![0.5, 0.75, 1.0, 1.25, 1.5],
            residency_multipliers: vec![0.5, 0.75, 1.0, 1.5, 2.0],
        }
    }
}

impl RunConfig {
    /// Reads and validates a config file. Relative trace paths are resolved
    /// against the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let mut cfg: RunConfig = toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [
            &mut cfg.workload.vu_trace,
            &mut cfg.workload.task_trace,
            &mut cfg.workload.parking_trace,
            &mut cfg.reliability.lut,
        ]
        .into_iter()
        .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let w = &self.workload;
        for (key, path) in [
            ("workload.vu_trace", &w.vu_trace),
            ("workload.task_trace", &w.task_trace),
            ("workload.parking_trace", &w.parking_trace),
            ("reliability.lut", &self.reliability.lut),
        ] {
            if let Some(p) = path {
                ensure!(p.is_file(), "{key}: {} does not exist", p.display());
            }
        }
        ensure!(
            !(w.vu_trace.is_some() && w.parking_trace.is_some()),
            "workload.vu_trace and workload.parking_trace are mutually exclusive"
        );
        self.workload(self.run.seed)?.validate()?;
        for mode in self.modes()? {
            for h in self.orderings()? {
                self.policy(mode, h).validate()?;
            }
        }
        let r = &self.reliability;
        ensure!(r.t_mttr_min > 0, "reliability.t_mttr_min must be positive");
        ensure!(r.q > 0.0 && r.q < 1.0, "reliability.q must lie in (0, 1)");
        ensure!(r.cdf_step_min > 0, "reliability.cdf_step_min must be positive");
        ensure!(r.cdf_until > 0.0 && r.cdf_until < 1.0, "reliability.cdf_until must lie in (0, 1)");
        ensure!(self.run.replications > 0, "run.replications must be positive");
        ensure!(self.policy.num_vcs > 0, "policy.num_vcs must be positive");
        ensure!(self.policy.k >= 0.0, "policy.k must be non-negative");
        let s = &self.sweep;
        ensure!(!s.task_counts.is_empty(), "sweep.task_counts is empty");
        ensure!(!s.vu_counts.is_empty(), "sweep.vu_counts is empty");
        ensure!(!s.exec_multipliers.is_empty(), "sweep.exec_multipliers is empty");
        ensure!(!s.residency_multipliers.is_empty(), "sweep.residency_multipliers is empty");
        ensure!(
            s.exec_multipliers.iter().chain(&s.residency_multipliers).all(|&m| m > 0.0),
            "sweep multipliers must be positive"
        );
        Ok(())
    }

    pub fn seeds(&self) -> Vec<u64> {
        (0..self.run.replications as u64).map(|i| self.run.seed.wrapping_add(i)).collect()
    }

    pub fn modes(&self) -> Result<Vec<Mode>> {
        if self.run.modes.is_empty() {
            bail!("run.modes is empty");
        }
        self.run.modes.iter().map(|m| Ok(m.parse::<Mode>()?)).collect()
    }

    pub fn orderings(&self) -> Result<Vec<Heuristic>> {
        if self.run.orderings.is_empty() {
            bail!("run.orderings is empty");
        }
        self.run.orderings.iter().map(|h| Ok(h.parse::<Heuristic>()?)).collect()
    }

    pub fn class_mix(&self) -> Result<ClassMix> {
        Ok(ClassMix::new(self.workload.mean_residency_min, self.workload.class_shares)?)
    }

    pub fn workload(&self, seed: u64) -> Result<WorkloadConfig> {
        let w = &self.workload;
        Ok(WorkloadConfig {
            num_tasks: w.num_tasks,
            num_vus: w.num_vus,
            class_mix: self.class_mix()?,
            mean_exec_min: w.mean_exec_min,
            max_exec_min: w.max_exec_min,
            laxity_exec_fraction: w.laxity_exec_fraction,
            laxity_extra_lo: w.laxity_extra_lo,
            laxity_extra_hi: w.laxity_extra_hi,
            k1: w.k1,
            k2: w.k2,
            vu_outlier_fraction: w.vu_outlier_fraction,
            outlier_stay_factor_lo: w.outlier_stay_factor_lo,
            outlier_stay_factor_hi: w.outlier_stay_factor_hi,
            task_outlier_fraction: w.task_outlier_fraction,
            task_outlier_exec_lo: w.task_outlier_exec_lo,
            task_outlier_exec_hi: w.task_outlier_exec_hi,
            task_window_min: w.task_window_min,
            vu_window_min: w.vu_window_min,
            config_time_min: w.config_time_min,
            seed,
        })
    }

    pub fn policy(&self, mode: Mode, heuristic: Heuristic) -> PolicyConfig {
        let p = &self.policy;
        PolicyConfig {
            delta: p.delta,
            e_threshold_critical_min: p.e_threshold_critical_min,
            heuristic,
            bounds: [p.srt_bounds, p.mrt_bounds, p.lrt_bounds].map(|[lo, hi]| (lo, hi)),
            reserved_lrt_fraction: p.reserved_lrt_fraction,
            k: Money::from_f64(p.k),
            scan_period_min: p.scan_period_min,
            mode,
            sota_redundancy: p.sota_redundancy,
            lrt_rate_alpha: p.lrt_rate_alpha,
            reserve_window_min: p.reserve_window_min,
        }
    }

    pub fn sim(&self, policy: PolicyConfig, seed: u64, record_events: bool) -> SimConfig {
        SimConfig {
            policy,
            t_mttr_min: self.reliability.t_mttr_min as Minutes,
            num_vcs: self.policy.num_vcs,
            horizon_min: self.policy.horizon_min,
            speed_variation: self.policy.speed_variation,
            record_events,
            check_invariants: false,
            seed,
        }
    }

    /// LUT ranges for a class mix, using the configured redundancy bounds.
    pub fn lut_ranges(&self, mix: &ClassMix) -> Vec<ClassRange> {
        let p = self.policy(Mode::Proposed, Heuristic::Ep);
        VuClass::ALL
            .iter()
            .map(|&class| {
                let (n_min, n_max) = p.bounds(class);
                ClassRange { class, mean_residency_min: mix.profile(class).mean_residency_min, n_min, n_max }
            })
            .collect()
    }
}
