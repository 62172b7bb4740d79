//! Direct simulation of a redundancy group, used as an independent check
//! on the analytic chain.

use rand::Rng;
use rand_distr::{Distribution, Exp};
use rayon::prelude::*;

use super::cdf::FailureCdf;
use super::chain::ChainParams;
use super::ReliabilityError;
use crate::rng;
use crate::Minutes;

/// Failure time of one group, or `None` if it survives past `horizon`.
///
/// Each present VU carries its own exponential departure clock. Every
/// departure spawns an independent replacement that shows up after an
/// exponential(μ) delay with a fresh residency clock. The group fails when
/// no VU is present.
fn simulate_trial<R: Rng>(params: &ChainParams, horizon: f64, rng: &mut R) -> Option<f64> {
    let leave = Exp::new(params.lambda).expect("lambda validated");
    let replace = Exp::new(params.mu()).expect("mu validated");
    let mut present: Vec<f64> = (0..params.n).map(|_| leave.sample(rng)).collect();
    let mut arriving: Vec<f64> = Vec::with_capacity(params.n as usize);
    loop {
        let (dep_idx, dep_t) = present
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, t)| (i, *t))
            .expect("group is non-empty between events");
        let next_arrival = arriving.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).map(|(i, t)| (i, *t));
        match next_arrival {
            Some((arr_idx, arr_t)) if arr_t < dep_t => {
                if arr_t > horizon {
                    return None;
                }
                arriving.swap_remove(arr_idx);
                present.push(arr_t + leave.sample(rng));
            }
            _ => {
                if dep_t > horizon {
                    return None;
                }
                present.swap_remove(dep_idx);
                if present.is_empty() {
                    return Some(dep_t);
                }
                arriving.push(dep_t + replace.sample(rng));
            }
        }
    }
}

/// Empirical failure CDF on a one-minute grid over `[0, horizon_min]`.
///
/// Trial `i` draws from its own stream derived from `(seed, i)`, so the
/// result does not depend on how rayon schedules the trials.
pub fn monte_carlo_failure_cdf(
    params: &ChainParams,
    trials: u32,
    horizon_min: Minutes,
    seed: u64,
) -> Result<FailureCdf, ReliabilityError> {
    params.validate()?;
    if trials == 0 {
        return Err(ReliabilityError::InvalidParams("at least one trial is required".into()));
    }
    let horizon = horizon_min as f64;
    let failures: Vec<Option<f64>> = (0..trials as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng::indexed_stream(seed, rng::MONTE_CARLO, i);
            simulate_trial(params, horizon, &mut rng)
        })
        .collect();

    // F(t) = P(T <= t); for continuous T and integer t that is ceil(T) <= t.
    let mut counts = vec![0u64; horizon_min as usize + 1];
    for t in failures.into_iter().flatten() {
        let bucket = t.ceil() as usize;
        if bucket < counts.len() {
            counts[bucket] += 1;
        }
    }
    let mut acc = 0u64;
    let values = counts
        .iter()
        .map(|c| {
            acc += c;
            acc as f64 / trials as f64
        })
        .collect();
    Ok(FailureCdf { step_min: 1, values })
}
