use super::ReliabilityError;

pub const DEFAULT_STATE_CAP: usize = 1_000_000;

/// Parameters of one redundancy group.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainParams {
    /// VUs executing the task redundantly.
    pub n: u32,
    /// Per-minute departure rate of one VU (1 / mean residency).
    pub lambda: f64,
    /// Mean time to replace a departed VU, in minutes.
    pub t_mttr: u32,
    /// Minutes per discrete step.
    pub step_min: u32,
}

impl ChainParams {
    pub fn new(n: u32, mean_residency_min: f64, t_mttr: u32) -> Self {
        Self { n, lambda: 1.0 / mean_residency_min, t_mttr, step_min: 1 }
    }

    pub fn validate(&self) -> Result<(), ReliabilityError> {
        let bad = |m: &str| Err(ReliabilityError::InvalidParams(m.to_string()));
        if self.n < 1 {
            return bad("n must be at least 1");
        }
        if !(self.lambda > 0.0) || !self.lambda.is_finite() {
            return bad("lambda must be positive and finite");
        }
        if self.t_mttr < 1 {
            return bad("t_mttr must be at least 1 minute");
        }
        if self.step_min < 1 || !self.t_mttr.is_multiple_of(self.step_min) {
            return bad("step_min must be positive and divide t_mttr");
        }
        Ok(())
    }

    /// Recruitment rate, 1 / t_mttr.
    pub fn mu(&self) -> f64 {
        1.0 / self.t_mttr as f64
    }

    /// Substates per recruiting group.
    pub fn substates(&self) -> u32 {
        self.t_mttr / self.step_min
    }

    pub fn state_count(&self) -> usize {
        2 + (self.n as usize - 1) * self.substates() as usize
    }

    /// Probability that all `n` VUs are still present after one step.
    fn healthy_stay(&self) -> f64 {
        (-(self.n as f64) * self.lambda * self.step_min as f64).exp()
    }
}

/// Probability that another VU leaves before recruitment completes when `j`
/// of the `n` VUs have already departed: `λ(n−j) / (μ + λ(n−j))`.
pub fn escalation_prob(params: &ChainParams, j: u32) -> Result<f64, ReliabilityError> {
    params.validate()?;
    if j >= params.n {
        return Err(ReliabilityError::NoEscalation { j, n: params.n });
    }
    let leave = params.lambda * (params.n - j) as f64;
    Ok(leave / (params.mu() + leave))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChainState {
    /// `G0`: all `n` VUs present.
    Healthy,
    /// Substate `step` (1-based) of group `G_departed`.
    Recruiting { departed: u32, step: u32 },
    /// `Gn`: every VU left; absorbing.
    Failed,
}

/// Discrete-time absorbing chain over `G0`, the unrolled recruiting groups
/// and `Gn`. Rows are stored sparsely; each has at most two entries.
#[derive(Debug, Clone)]
pub struct ReliabilityChain {
    params: ChainParams,
    rows: Vec<Vec<(usize, f64)>>,
}

impl ReliabilityChain {
    pub fn params(&self) -> &ChainParams {
        &self.params
    }

    pub fn state_count(&self) -> usize {
        self.rows.len()
    }

    pub fn failed_index(&self) -> usize {
        self.rows.len() - 1
    }

    pub fn index_of(&self, state: ChainState) -> Option<usize> {
        let s = self.params.substates();
        match state {
            ChainState::Healthy => Some(0),
            ChainState::Failed => Some(self.failed_index()),
            ChainState::Recruiting { departed, step } => {
                if departed == 0 || departed >= self.params.n || step == 0 || step > s {
                    None
                } else {
                    Some(1 + ((departed - 1) * s + (step - 1)) as usize)
                }
            }
        }
    }

    pub fn row(&self, index: usize) -> &[(usize, f64)] {
        &self.rows[index]
    }

    pub fn transition(&self, from: usize, to: usize) -> f64 {
        self.rows[from].iter().filter(|(t, _)| *t == to).map(|(_, p)| p).sum()
    }

    /// One forward step of a distribution over states.
    pub fn step_distribution(&self, current: &[f64], next: &mut [f64]) {
        next.iter_mut().for_each(|x| *x = 0.0);
        for (from, mass) in current.iter().enumerate() {
            if *mass == 0.0 {
                continue;
            }
            for &(to, p) in &self.rows[from] {
                next[to] += mass * p;
            }
        }
    }
}

pub fn build_chain(params: ChainParams) -> Result<ReliabilityChain, ReliabilityError> {
    build_chain_capped(params, DEFAULT_STATE_CAP)
}

pub(crate) fn build_chain_capped(params: ChainParams, cap: usize) -> Result<ReliabilityChain, ReliabilityError> {
    params.validate()?;
    let n = params.n;
    let s = params.substates();
    let states = (n as usize - 1)
        .checked_mul(s as usize)
        .and_then(|v| v.checked_add(2))
        .ok_or(ReliabilityError::TooManyStates { states: usize::MAX, cap })?;
    if states > cap {
        return Err(ReliabilityError::TooManyStates { states, cap });
    }
    let failed = states - 1;
    let entry = |departed: u32| -> usize {
        if departed >= n {
            failed
        } else {
            1 + ((departed - 1) * s) as usize
        }
    };

    let mut rows = Vec::with_capacity(states);
    let stay = params.healthy_stay();
    rows.push(vec![(0, stay), (entry(1), 1.0 - stay)]);
    for j in 1..n {
        let p = escalation_prob(&params, j)?;
        for k in 1..=s {
            let here = 1 + ((j - 1) * s + (k - 1)) as usize;
            let row = if k < s {
                let esc = p / s as f64;
                vec![(here + 1, 1.0 - esc), (entry(j + 1), esc)]
            } else {
                vec![(0, 1.0 - p), (entry(j + 1), p)]
            };
            rows.push(row);
        }
    }
    rows.push(vec![(failed, 1.0)]);
    debug_assert_eq!(rows.len(), states);
    Ok(ReliabilityChain { params, rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn escalation_matches_hand_computed_values() {
        // 2/120 / (1/10 + 2/120) = (1/60) / (7/60) = 1/7
        let p = escalation_prob(&ChainParams::new(3, 120.0, 10), 1).unwrap();
        assert!((p - 1.0 / 7.0).abs() < 1e-12);
        // 1/200 / (1/10 + 1/200) = 1/21
        let p = escalation_prob(&ChainParams::new(2, 200.0, 10), 1).unwrap();
        assert!((p - 1.0 / 21.0).abs() < 1e-12);
        let tiny = ChainParams { n: 3, lambda: 1e-9, t_mttr: 1, step_min: 1 };
        let p0 = escalation_prob(&tiny, 0).unwrap();
        assert!((p0 - 3e-9).abs() < 1e-15);
    }

    #[test]
    fn escalation_rejects_absorbing_group() {
        let params = ChainParams::new(3, 120.0, 10);
        assert_eq!(escalation_prob(&params, 3), Err(ReliabilityError::NoEscalation { j: 3, n: 3 }));
    }

    #[test]
    fn single_vu_chain_has_two_states() {
        let params = ChainParams::new(1, 120.0, 10);
        let chain = build_chain(params).unwrap();
        assert_eq!(chain.state_count(), 2);
        let h0 = 1.0 - (-1.0f64 / 120.0).exp();
        assert!((chain.transition(0, 0) - (1.0 - h0)).abs() < 1e-15);
        assert!((chain.transition(0, 1) - h0).abs() < 1e-15);
        assert_eq!(chain.transition(1, 1), 1.0);
    }

    #[test]
    fn state_count_and_stochastic_rows() {
        let chain = build_chain(ChainParams::new(3, 120.0, 10)).unwrap();
        assert_eq!(chain.state_count(), 22);
        for i in 0..chain.state_count() {
            let sum: f64 = chain.row(i).iter().map(|(_, p)| p).sum();
            assert!((sum - 1.0).abs() < 1e-12, "row {i} sums to {sum}");
        }
        let failed = chain.failed_index();
        assert_eq!(chain.row(failed), &[(failed, 1.0)]);
    }

    #[test]
    fn last_substate_returns_to_healthy_or_escalates() {
        let params = ChainParams::new(2, 200.0, 5);
        let chain = build_chain(params).unwrap();
        let p1 = escalation_prob(&params, 1).unwrap();
        let last = chain.index_of(ChainState::Recruiting { departed: 1, step: 5 }).unwrap();
        assert!((chain.transition(last, 0) - (1.0 - p1)).abs() < 1e-15);
        assert!((chain.transition(last, chain.failed_index()) - p1).abs() < 1e-15);
        let first = chain.index_of(ChainState::Recruiting { departed: 1, step: 1 }).unwrap();
        assert!((chain.transition(first, chain.failed_index()) - p1 / 5.0).abs() < 1e-15);
        assert!((chain.transition(first, first + 1) - (1.0 - p1 / 5.0)).abs() < 1e-15);
    }

    #[test]
    fn coarser_steps_shrink_the_chain() {
        let params = ChainParams { n: 3, lambda: 1.0 / 120.0, t_mttr: 10, step_min: 5 };
        let chain = build_chain(params).unwrap();
        assert_eq!(chain.state_count(), 2 + 2 * 2);
        let bad = ChainParams { step_min: 3, ..params };
        assert!(build_chain(bad).is_err());
    }

    #[test]
    fn state_cap_guard() {
        let params = ChainParams::new(50, 120.0, 1000);
        assert!(matches!(build_chain_capped(params, 10_000), Err(ReliabilityError::TooManyStates { .. })));
    }
}
