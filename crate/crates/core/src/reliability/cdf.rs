use super::chain::{build_chain, ChainParams, ReliabilityChain};
use super::ReliabilityError;
use crate::Minutes;

/// Doublings allowed on top of the initial horizon before giving up.
const MAX_DOUBLINGS: u32 = 8;
/// Initial horizon as a multiple of `mean residency × n`.
const HORIZON_FACTOR: f64 = 64.0;

/// Failure probability sampled every `step_min` minutes from `t = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct FailureCdf {
    pub step_min: u32,
    pub values: Vec<f64>,
}

impl FailureCdf {
    pub fn horizon_min(&self) -> Minutes {
        (self.values.len().saturating_sub(1) as u64) * self.step_min as u64
    }

    /// `F(t)` for the largest sample time not after `t`.
    pub fn at(&self, t: Minutes) -> f64 {
        let idx = (t / self.step_min as u64) as usize;
        self.values[idx.min(self.values.len() - 1)]
    }

    /// Largest absolute difference over the common sample grid.
    pub fn sup_distance(&self, other: &FailureCdf) -> f64 {
        assert_eq!(self.step_min, other.step_min, "CDFs sampled on different grids");
        self.values.iter().zip(&other.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }
}

/// Forward-iterates the chain from `G0`, recording the mass on `Gn`.
pub fn failure_cdf(chain: &ReliabilityChain, horizon_min: Minutes) -> FailureCdf {
    let step = chain.params().step_min;
    let steps = (horizon_min / step as u64) as usize;
    let failed = chain.failed_index();
    let mut current = vec![0.0; chain.state_count()];
    let mut next = vec![0.0; chain.state_count()];
    current[0] = 1.0;
    let mut values = Vec::with_capacity(steps + 1);
    values.push(0.0);
    for _ in 0..steps {
        chain.step_distribution(&current, &mut next);
        std::mem::swap(&mut current, &mut next);
        values.push(current[failed]);
    }
    FailureCdf { step_min: step, values }
}

/// Largest sampled `t` with `F(t) <= q`.
pub fn quantile_time(cdf: &FailureCdf, q: f64) -> Result<Minutes, ReliabilityError> {
    if !(q > 0.0 && q < 1.0) {
        return Err(ReliabilityError::BadQuantile(q));
    }
    let last = *cdf.values.last().unwrap_or(&0.0);
    if last <= q {
        return Err(ReliabilityError::HorizonTooShort { horizon: cdf.horizon_min(), reached: last, q });
    }
    let first_above = cdf.values.partition_point(|&f| f <= q);
    Ok((first_above as u64 - 1) * cdf.step_min as u64)
}

/// Quantile of the failure time for `params`, starting from a horizon of
/// `64 × mean residency × n` and doubling it while the CDF stays below `q`.
pub fn quantile_with_doubling(params: &ChainParams, q: f64) -> Result<Minutes, ReliabilityError> {
    if !(q > 0.0 && q < 1.0) {
        return Err(ReliabilityError::BadQuantile(q));
    }
    let chain = build_chain(*params)?;
    let step = params.step_min as u64;
    let mut horizon = (HORIZON_FACTOR * params.n as f64 / params.lambda).ceil() as u64;
    let failed = chain.failed_index();
    let mut current = vec![0.0; chain.state_count()];
    let mut next = vec![0.0; chain.state_count()];
    current[0] = 1.0;
    let mut t: u64 = 0;
    for _ in 0..=MAX_DOUBLINGS {
        while t + step <= horizon {
            chain.step_distribution(&current, &mut next);
            std::mem::swap(&mut current, &mut next);
            t += step;
            if current[failed] > q {
                return Ok(t - step);
            }
        }
        horizon *= 2;
    }
    Err(ReliabilityError::HorizonTooShort { horizon: t, reached: current[failed], q })
}

/// Time at which failure probability reaches one half.
pub fn mttf(params: &ChainParams) -> Result<Minutes, ReliabilityError> {
    quantile_with_doubling(params, 0.5)
}

/// Time up to which the failure probability stays within 1%.
pub fn mt99r(params: &ChainParams) -> Result<Minutes, ReliabilityError> {
    quantile_with_doubling(params, 0.01)
}
