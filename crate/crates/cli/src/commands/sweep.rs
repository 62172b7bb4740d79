use anyhow::{Context, Result};
use rayon::prelude::*;

use vcsim_core::engine::{self, SimConfig, SimReport};
use vcsim_core::model::ClassMix;
use vcsim_core::reliability::{build_lut, Lut};
use vcsim_core::workload::{
    gen_tasks, gen_vus, ingest_parking_text, read_task_csv, read_vu_csv, IngestOptions, TaskTrace, VuTrace,
    WorkloadConfig,
};

use crate::Ctx;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Source {
    /// Trace files or the parking trace when configured, else synthetic.
    Configured,
    /// Always generated from the workload parameters.
    Synthetic,
}

/// One simulation: the workload to build, the engine settings and the LUT
/// to plan with.
pub struct Cell {
    pub wc: WorkloadConfig,
    pub sim: SimConfig,
    pub lut: usize,
    pub source: Source,
}

pub struct Runner<'a> {
    ctx: &'a Ctx,
    luts: Vec<(Option<[f64; 3]>, Lut)>,
    vus: Option<VuTrace>,
    tasks: Option<TaskTrace>,
    parking: Option<String>,
}

fn read(path: &std::path::Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

impl<'a> Runner<'a> {
    /// Loads external traces and the base LUT (index 0).
    pub fn new(ctx: &'a Ctx) -> Result<Self> {
        let w = &ctx.cfg.workload;
        let vus = match &w.vu_trace {
            Some(p) => Some(read_vu_csv(&read(p)?, w.config_time_min).with_context(|| format!("in {}", p.display()))?),
            None => None,
        };
        let tasks = match &w.task_trace {
            Some(p) => Some(read_task_csv(&read(p)?).with_context(|| format!("in {}", p.display()))?),
            None => None,
        };
        let parking = w.parking_trace.as_deref().map(read).transpose()?;
        let mut runner = Self { ctx, luts: Vec::new(), vus, tasks, parking };
        match &ctx.cfg.reliability.lut {
            Some(p) => {
                let lut = Lut::from_csv(&read(p)?).with_context(|| format!("in {}", p.display()))?;
                runner.luts.push((None, lut));
            }
            None => {
                runner.add_lut(&ctx.cfg.class_mix()?)?;
            }
        }
        Ok(runner)
    }

    /// Index of a LUT for `mix`, building it unless one with the same
    /// residency means exists.
    pub fn add_lut(&mut self, mix: &ClassMix) -> Result<usize> {
        let means = mix.profiles().map(|p| p.mean_residency_min);
        if let Some(i) = self.luts.iter().position(|(m, _)| *m == Some(means)) {
            return Ok(i);
        }
        let cfg = &self.ctx.cfg;
        let ranges = cfg.lut_ranges(mix);
        let lut = self.ctx.pool.install(|| build_lut(&ranges, cfg.reliability.t_mttr_min, cfg.reliability.q))?;
        self.luts.push((Some(means), lut));
        Ok(self.luts.len() - 1)
    }

    pub fn traces(&self, wc: &WorkloadConfig, source: Source) -> Result<(VuTrace, TaskTrace)> {
        let external = source == Source::Configured;
        let vus = match (&self.vus, &self.parking) {
            (Some(v), _) if external => v.clone(),
            (_, Some(text)) if external => {
                let opts = IngestOptions { seed: wc.seed, config_time_min: wc.config_time_min, ..Default::default() };
                ingest_parking_text(text, &opts)?
            }
            _ => gen_vus(wc)?,
        };
        let tasks = match &self.tasks {
            Some(t) if external => t.clone(),
            _ => gen_tasks(wc)?,
        };
        Ok((vus, tasks))
    }

    fn run_one(&self, cell: &Cell) -> Result<SimReport> {
        let (vus, tasks) = self.traces(&cell.wc, cell.source)?;
        let report = engine::run(&vus, &tasks, &cell.sim, &self.luts[cell.lut].1)
            .with_context(|| format!("{} seed {}", cell.sim.policy.label(), cell.sim.seed))?;
        Ok(report)
    }

    /// Runs every cell on the worker pool; results keep the cell order.
    pub fn run_all(&self, cells: &[Cell]) -> Result<Vec<SimReport>> {
        self.ctx.pool.install(|| cells.par_iter().map(|c| self.run_one(c)).collect())
    }
}
