use rand::seq::index;
use rand::Rng;
use rand_distr::{Distribution, Exp};

use super::{TaskTrace, VuTrace, WorkloadConfig, WorkloadError};
use crate::model::{Task, VehicularUnit};
use crate::{rng, Minutes, Money, VuClass};

/// Revenue offered for a task: `k1 · e^1.5 + k2 / l²`.
pub fn price(exec_min: Minutes, laxity_min: Minutes, k1: f64, k2: f64) -> Money {
    let e = exec_min as f64;
    let l = laxity_min as f64;
    Money::from_f64(k1 * e.powf(1.5) + k2 / (l * l))
}

fn pick_class<R: Rng>(cfg: &WorkloadConfig, rng: &mut R) -> VuClass {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for p in cfg.class_mix.profiles() {
        acc += p.population_share;
        if u < acc {
            return p.class;
        }
    }
    // Rounding slack: fall back to the last class with a non-zero share.
    cfg.class_mix.profiles().iter().rev().find(|p| p.population_share > 0.0).map(|p| p.class).unwrap_or(VuClass::Srt)
}

fn outlier_set<R: Rng>(count: usize, fraction: f64, rng: &mut R) -> Vec<bool> {
    let mut flags = vec![false; count];
    let amount = ((count as f64) * fraction).round() as usize;
    for i in index::sample(rng, count, amount.min(count)) {
        flags[i] = true;
    }
    flags
}

/// Poisson arrivals, class by population share, exponential declared stay.
/// A fixed fraction of VUs leave at `declared · U[lo, hi]` instead of the
/// declared time.
pub fn gen_vus(cfg: &WorkloadConfig) -> Result<VuTrace, WorkloadError> {
    cfg.validate()?;
    let mut rng = rng::stream(cfg.seed, rng::VU_GEN);
    let n = cfg.num_vus as usize;
    let inter = Exp::new(cfg.vu_arrival_rate()).map_err(|e| WorkloadError::Config(e.to_string()))?;

    let mut t = 0.0f64;
    let mut draws = Vec::with_capacity(n);
    for _ in 0..n {
        t += inter.sample(&mut rng);
        let class = pick_class(cfg, &mut rng);
        let mean = cfg.class_mix.profile(class).mean_residency_min;
        let stay = Exp::new(1.0 / mean).expect("validated mean").sample(&mut rng);
        draws.push((t.floor() as Minutes, class, (stay.round() as Minutes).max(1)));
    }
    let outliers = outlier_set(n, cfg.vu_outlier_fraction, &mut rng);

    let mut vus = Vec::with_capacity(n);
    for (i, ((arrival, class, declared), outlier)) in draws.into_iter().zip(outliers).enumerate() {
        let actual_stay = if outlier {
            let factor = rng.random_range(cfg.outlier_stay_factor_lo..=cfg.outlier_stay_factor_hi);
            ((declared as f64 * factor).round() as Minutes).max(1)
        } else {
            declared
        };
        vus.push(VehicularUnit::new(i as u32, class, arrival, declared, arrival + actual_stay, cfg.config_time_min)?);
    }
    Ok(VuTrace { vus })
}

/// Poisson arrivals; execution time exponential, truncated to
/// `[1, max_exec_min]`, with a small fraction redrawn as long outliers.
pub fn gen_tasks(cfg: &WorkloadConfig) -> Result<TaskTrace, WorkloadError> {
    cfg.validate()?;
    let mut rng = rng::stream(cfg.seed, rng::TASK_GEN);
    let n = cfg.num_tasks as usize;
    let inter =
        Exp::new(cfg.task_arrival_rate().max(f64::MIN_POSITIVE)).map_err(|e| WorkloadError::Config(e.to_string()))?;
    let exec = Exp::new(1.0 / cfg.mean_exec_min).map_err(|e| WorkloadError::Config(e.to_string()))?;

    let mut t = 0.0f64;
    let mut base = Vec::with_capacity(n);
    for _ in 0..n {
        t += inter.sample(&mut rng);
        let e = loop {
            let e = exec.sample(&mut rng).round() as Minutes;
            if (1..=cfg.max_exec_min).contains(&e) {
                break e;
            }
        };
        base.push((t.floor() as Minutes, e));
    }
    let outliers = outlier_set(n, cfg.task_outlier_fraction, &mut rng);

    let mut tasks = Vec::with_capacity(n);
    for (i, ((arrival, mut e), outlier)) in base.into_iter().zip(outliers).enumerate() {
        if outlier {
            e = rng.random_range(cfg.task_outlier_exec_lo..=cfg.task_outlier_exec_hi).round() as Minutes;
        }
        let extra = rng.random_range(cfg.laxity_extra_lo..=cfg.laxity_extra_hi);
        let laxity = ((cfg.laxity_exec_fraction * e as f64 + extra).round() as Minutes).max(1);
        let revenue = price(e, laxity, cfg.k1, cfg.k2);
        tasks.push(Task::new(i as u32, arrival, e, arrival + e + laxity, revenue)?);
    }
    Ok(TaskTrace { tasks })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> WorkloadConfig {
        WorkloadConfig { num_tasks: 200, num_vus: 500, seed: 9, ..Default::default() }
    }

    #[test]
    fn price_formula() {
        assert_eq!(price(400, 1000, 3.0, 10_000.0), Money::from_milli(24_000_010));
        // e → small: only the deadline term remains.
        assert_eq!(price(0, 100, 3.0, 10_000.0), Money::from_units(1));
        assert!(price(1, 100, 3.0, 10_000.0) > Money::from_units(1));
    }

    #[test]
    fn degenerate_mix_yields_single_class() {
        let mut cfg = WorkloadConfig { num_vus: 10, ..small() };
        cfg.class_mix = cfg.class_mix.single_class(VuClass::Srt);
        let trace = gen_vus(&cfg).unwrap();
        assert_eq!(trace.len(), 10);
        assert!(trace.vus.iter().all(|v| v.class == VuClass::Srt));
    }

    #[test]
    fn no_outliers_means_declared_departures() {
        let cfg = WorkloadConfig { vu_outlier_fraction: 0.0, ..small() };
        let trace = gen_vus(&cfg).unwrap();
        assert!(trace.vus.iter().all(|v| v.actual_departure_min == v.arrival_min + v.declared_stay_min));
    }

    #[test]
    fn outlier_fraction_is_exact() {
        let trace = gen_vus(&small()).unwrap();
        let deviating =
            trace.vus.iter().filter(|v| v.actual_departure_min != v.arrival_min + v.declared_stay_min).count();
        assert!(deviating <= 50);
        assert!(deviating >= 40, "{deviating}");
    }

    #[test]
    fn srt_mean_stay_at_base_scale() {
        let trace = gen_vus(&WorkloadConfig::default()).unwrap();
        let srt: Vec<f64> =
            trace.vus.iter().filter(|v| v.class == VuClass::Srt).map(|v| v.declared_stay_min as f64).collect();
        let mean = srt.iter().sum::<f64>() / srt.len() as f64;
        assert!((mean - 120.0).abs() <= 5.0, "mean {mean}");
    }

    #[test]
    fn tasks_satisfy_deadline_identity() {
        let trace = gen_tasks(&WorkloadConfig::default()).unwrap();
        assert_eq!(trace.len(), 1000);
        assert!(trace.is_sorted());
        let mean = trace.tasks.iter().map(|t| t.exec_min as f64).sum::<f64>() / 1000.0;
        assert!((mean - 1000.0).abs() <= 60.0, "mean exec {mean}");
        for t in &trace.tasks {
            assert!(t.laxity_min() > 0);
            assert_eq!(t.deadline_min as i64, t.arrival_min as i64 + t.exec_min as i64 + t.laxity_min());
            assert!(t.revenue > Money::ZERO);
            assert!(t.exec_min >= 1 && t.exec_min <= 5000);
        }
    }

    #[test]
    fn generation_is_deterministic() {
        assert_eq!(gen_vus(&small()).unwrap(), gen_vus(&small()).unwrap());
        assert_eq!(gen_tasks(&small()).unwrap(), gen_tasks(&small()).unwrap());
        let other = WorkloadConfig { seed: 10, ..small() };
        assert_ne!(gen_tasks(&small()).unwrap(), gen_tasks(&other).unwrap());
    }

    #[test]
    fn empty_task_trace() {
        let cfg = WorkloadConfig { num_tasks: 0, ..small() };
        assert!(gen_tasks(&cfg).unwrap().is_empty());
    }
}
