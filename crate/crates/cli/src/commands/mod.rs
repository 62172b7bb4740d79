mod sweep;

use std::fmt::Write as _;
use std::path::PathBuf;

use anyhow::{Context, Result};
use rayon::prelude::*;

use vcsim_core::engine::{PairedComparison, ProfitSummary, SimReport};
use vcsim_core::policy::Mode;
use vcsim_core::reliability::{build_chain, build_lut, failure_cdf, quantile_with_doubling};
use vcsim_core::workload::{task_csv, vu_csv, TraceSummary, WorkloadConfig};
use vcsim_core::VuClass;

use crate::output::{f3, write_atomic};
use crate::Ctx;
use sweep::{Cell, Runner, Source};

/// LUT for the configured classes plus one CDF dump per `(class, n)`.
pub fn lut(ctx: &Ctx, q: Option<f64>) -> Result<Vec<PathBuf>> {
    let cfg = &ctx.cfg;
    let q = q.unwrap_or(cfg.reliability.q);
    let ranges = cfg.lut_ranges(&cfg.class_mix()?);
    let lut = ctx.pool.install(|| build_lut(&ranges, cfg.reliability.t_mttr_min, q))?;
    let name = if q == 0.5 { "mttf.csv" } else { "lut.csv" };
    let mut files = vec![write_atomic(&ctx.out.join(name), &lut.to_csv())?];

    let entries: Vec<_> = lut.entries().cloned().collect();
    let step = cfg.reliability.cdf_step_min;
    let until = cfg.reliability.cdf_until;
    let dumps: Vec<Result<(String, String)>> = ctx.pool.install(|| {
        entries
            .par_iter()
            .map(|e| {
                let horizon = quantile_with_doubling(&e.params, until)? + step;
                let cdf = failure_cdf(&build_chain(e.params)?, horizon);
                let mut text = String::from("t_min,failure_prob\n");
                for t in (0..=horizon).step_by(step as usize) {
                    let _ = writeln!(text, "{t},{:.9}", cdf.at(t));
                }
                Ok((format!("cdf_{}_n{}.csv", e.class, e.n), text))
            })
            .collect()
    });
    for dump in dumps {
        let (name, text) = dump?;
        files.push(write_atomic(&ctx.out.join("cdf").join(name), &text)?);
    }
    Ok(files)
}

/// Traces for the first seed and their summary.
pub fn gen(ctx: &Ctx) -> Result<(Vec<PathBuf>, TraceSummary)> {
    let runner = Runner::new(ctx)?;
    let seed = ctx.cfg.run.seed;
    let wc = ctx.cfg.workload(seed)?;
    let (vus, tasks) = runner.traces(&wc, Source::Configured)?;
    let files = vec![
        write_atomic(&ctx.out.join("vus.csv"), &vu_csv(&vus))?,
        write_atomic(&ctx.out.join("tasks.csv"), &task_csv(&tasks))?,
    ];
    Ok((files, TraceSummary::of(&vus, &tasks)))
}

fn report_csv(reports: &[SimReport]) -> String {
    let mut out = format!("{}\n", SimReport::CSV_HEADER);
    for r in reports {
        out.push_str(&r.csv_row());
        out.push('\n');
    }
    out
}

fn write_event_logs(ctx: &Ctx, reports: &[SimReport]) -> Result<Vec<PathBuf>> {
    reports
        .iter()
        .filter_map(|r| r.event_log.as_ref().map(|log| (r, log)))
        .map(|(r, log)| write_atomic(&ctx.out.join("events").join(format!("{}_seed{}.csv", r.label, r.seed)), log))
        .collect()
}

/// Every (mode, ordering, seed) on the configured workload.
pub fn run(ctx: &Ctx) -> Result<Vec<PathBuf>> {
    let cfg = &ctx.cfg;
    let runner = Runner::new(ctx)?;
    let seeds = cfg.seeds();
    let mut cells = Vec::new();
    for mode in cfg.modes()? {
        for h in cfg.orderings()? {
            for &seed in &seeds {
                let sim = cfg.sim(cfg.policy(mode, h), seed, ctx.event_log);
                cells.push(Cell { wc: cfg.workload(seed)?, sim, lut: 0, source: Source::Configured });
            }
        }
    }
    let reports = runner.run_all(&cells)?;

    let mut summary = String::from("policy,runs,profit_mean,profit_std,profit_pct_mean,profit_pct_std\n");
    for group in reports.chunks(seeds.len()) {
        let s = ProfitSummary::of(group);
        let _ = writeln!(
            summary,
            "{},{},{},{},{},{}",
            group[0].label,
            s.runs,
            f3(s.profit_mean),
            f3(s.profit_std),
            f3(s.profit_pct_mean),
            f3(s.profit_pct_std)
        );
    }
    let mut files = vec![
        write_atomic(&ctx.out.join("run.csv"), &report_csv(&reports))?,
        write_atomic(&ctx.out.join("run_summary.csv"), &summary)?,
    ];
    files.extend(write_event_logs(ctx, &reports)?);
    Ok(files)
}

#[derive(Clone, Copy, PartialEq)]
enum Series {
    Base,
    Tasks(u32),
    Vus(u32),
    Exec(f64, Option<VuClass>),
    Residency(f64, Option<VuClass>),
}

fn population(class: Option<VuClass>) -> String {
    class.map_or("mixed".to_string(), |c| c.to_string())
}

/// Paired proposed/baseline runs on the configured workload, plus the
/// profit series over task count, VU count, mean execution time and mean
/// residency.
///
/// The execution-time and residency series run the proposed policy on
/// single-class populations; the residency series also covers the mixed
/// population. Profit percentage is profit over offered revenue.
pub fn compare(ctx: &Ctx) -> Result<Vec<PathBuf>> {
    let cfg = &ctx.cfg;
    let ordering = cfg.orderings()?[0];
    let seeds = cfg.seeds();
    let base_mix = cfg.class_mix()?;
    let base = cfg.workload(0)?;

    let mut runner = Runner::new(ctx)?;
    let res_luts: Vec<usize> = cfg
        .sweep
        .residency_multipliers
        .iter()
        .map(|&m| runner.add_lut(&base_mix.scaled_residency(m)))
        .collect::<Result<_>>()?;

    let mut keys = Vec::new();
    let mut cells = Vec::new();
    let mut push = |series: Series, mode: Mode, wc: &WorkloadConfig, lut: usize| {
        for &seed in &seeds {
            let record = ctx.event_log && series == Series::Base;
            let sim = cfg.sim(cfg.policy(mode, ordering), seed, record);
            let source = if series == Series::Base { Source::Configured } else { Source::Synthetic };
            keys.push((series, mode));
            cells.push(Cell { wc: WorkloadConfig { seed, ..wc.clone() }, sim, lut, source });
        }
    };
    let both = [Mode::Proposed, Mode::Sota];
    for mode in both {
        push(Series::Base, mode, &base, 0);
    }
    for &n in &cfg.sweep.task_counts {
        for mode in both {
            push(Series::Tasks(n), mode, &WorkloadConfig { num_tasks: n, ..base.clone() }, 0);
        }
    }
    for &m in &cfg.sweep.vu_counts {
        for mode in both {
            push(Series::Vus(m), mode, &WorkloadConfig { num_vus: m, ..base.clone() }, 0);
        }
    }
    for class in VuClass::ALL {
        for &x in &cfg.sweep.exec_multipliers {
            let wc = WorkloadConfig {
                class_mix: base_mix.single_class(class),
                mean_exec_min: base.mean_exec_min * x,
                max_exec_min: (base.max_exec_min as f64 * x).round() as u64,
                ..base.clone()
            };
            push(Series::Exec(x, Some(class)), Mode::Proposed, &wc, 0);
        }
    }
    for class in VuClass::ALL.map(Some).into_iter().chain([None]) {
        for (&x, &lut) in cfg.sweep.residency_multipliers.iter().zip(&res_luts) {
            let mix = class.map_or(base_mix, |c| base_mix.single_class(c)).scaled_residency(x);
            let wc = WorkloadConfig { class_mix: mix, ..base.clone() };
            push(Series::Residency(x, class), Mode::Proposed, &wc, lut);
        }
    }

    let reports = runner.run_all(&cells)?;
    let groups: Vec<((Series, Mode), &[SimReport])> =
        keys.chunks(seeds.len()).zip(reports.chunks(seeds.len())).map(|(k, r)| (k[0], r)).collect();
    let pick =
        |s: Series, mode: Mode| groups.iter().find(|(k, _)| *k == (s, mode)).map(|(_, r)| *r).context("missing group");

    let proposed = pick(Series::Base, Mode::Proposed)?;
    let sota = pick(Series::Base, Mode::Sota)?;
    let c = PairedComparison::of(proposed, sota);
    let compare = format!(
        "proposed,baseline,runs,proposed_wins,proposed_profit_mean,baseline_profit_mean,gain_pct\n{},{},{},{},{},{},{}\n",
        proposed[0].label,
        sota[0].label,
        c.runs,
        c.wins,
        f3(c.first_mean),
        f3(c.second_mean),
        f3(c.gain_pct)
    );
    let base_rows: Vec<SimReport> = proposed.iter().chain(sota).cloned().collect();

    let mut tasks = String::from("num_tasks,policy,runs,profit_mean,profit_std\n");
    let mut vus = String::from("num_vus,policy,runs,profit_mean,profit_std\n");
    let mut exec =
        String::from("mean_exec_min,population,policy,runs,profit_pct_of_offered_mean,profit_pct_of_offered_std\n");
    let mut res = String::from(
        "residency_multiplier,population,policy,runs,profit_pct_of_offered_mean,profit_pct_of_offered_std\n",
    );
    for ((series, _), group) in &groups {
        let s = ProfitSummary::of(*group);
        let label = &group[0].label;
        let _ = match *series {
            Series::Base => Ok(()),
            Series::Tasks(n) => writeln!(tasks, "{n},{label},{},{},{}", s.runs, f3(s.profit_mean), f3(s.profit_std)),
            Series::Vus(m) => writeln!(vus, "{m},{label},{},{},{}", s.runs, f3(s.profit_mean), f3(s.profit_std)),
            Series::Exec(x, class) => writeln!(
                exec,
                "{},{},{label},{},{},{}",
                base.mean_exec_min * x,
                population(class),
                s.runs,
                f3(s.profit_pct_mean),
                f3(s.profit_pct_std)
            ),
            Series::Residency(x, class) => writeln!(
                res,
                "{x},{},{label},{},{},{}",
                population(class),
                s.runs,
                f3(s.profit_pct_mean),
                f3(s.profit_pct_std)
            ),
        };
    }

    let mut files = vec![
        write_atomic(&ctx.out.join("compare.csv"), &compare)?,
        write_atomic(&ctx.out.join("compare_runs.csv"), &report_csv(&base_rows))?,
        write_atomic(&ctx.out.join("profit_vs_tasks.csv"), &tasks)?,
        write_atomic(&ctx.out.join("profit_vs_vus.csv"), &vus)?,
        write_atomic(&ctx.out.join("profit_pct_vs_exec.csv"), &exec)?,
        write_atomic(&ctx.out.join("profit_pct_vs_residency.csv"), &res)?,
    ];
    files.extend(write_event_logs(ctx, &base_rows)?);
    Ok(files)
}
