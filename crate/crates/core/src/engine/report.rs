use std::fmt::Write as _;

use crate::model::TaskStatus;
use crate::{Minutes, Money, TaskId};

/// Final state of one task.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskOutcome {
    pub id: TaskId,
    pub status: TaskStatus,
    /// Completion time, or the time the task was dropped.
    pub finished_min: Option<Minutes>,
    pub late: bool,
    pub revenue: Money,
    pub cost: Money,
    pub vu_minutes: u64,
    /// Number of groups formed for the task (checkpoints plus retries).
    pub groups: u32,
    pub failures: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimReport {
    pub label: String,
    pub seed: u64,
    pub num_tasks: usize,
    pub num_vus: usize,
    pub profit: Money,
    pub revenue: Money,
    pub cost: Money,
    /// Sum of revenue on offer, completed or not.
    pub offered_revenue: Money,
    pub completed: u32,
    pub late: u32,
    pub failed: u32,
    pub rejected: u32,
    pub vu_minutes_busy: u64,
    pub vu_minutes_idle: u64,
    pub horizon_min: Minutes,
    pub ledger: Vec<TaskOutcome>,
    pub config_digest: u64,
    /// FNV-1a over the processed event sequence.
    pub event_digest: u64,
    pub events_processed: u64,
    /// `time_min,event_type,entity_id,detail` lines when logging was enabled.
    pub event_log: Option<String>,
}

impl SimReport {
    pub const CSV_HEADER: &'static str =
        "policy,seed,N,M,profit,revenue,cost,completed,late,failed,rejected,vu_minutes_busy,vu_minutes_idle";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.label,
            self.seed,
            self.num_tasks,
            self.num_vus,
            self.profit,
            self.revenue,
            self.cost,
            self.completed,
            self.late,
            self.failed,
            self.rejected,
            self.vu_minutes_busy,
            self.vu_minutes_idle
        )
    }

    /// Profit as a share of offered revenue, in percent.
    pub fn profit_pct(&self) -> f64 {
        if self.offered_revenue == Money::ZERO {
            0.0
        } else {
            100.0 * self.profit.as_f64() / self.offered_revenue.as_f64()
        }
    }

    pub fn ledger_csv(&self) -> String {
        let mut out = String::from("task_id,status,finished_min,late,revenue,cost,vu_minutes,groups,failures\n");
        for o in &self.ledger {
            let finished = o.finished_min.map(|t| t.to_string()).unwrap_or_default();
            let _ = writeln!(
                out,
                "{},{:?},{},{},{},{},{},{},{}",
                o.id, o.status, finished, o.late, o.revenue, o.cost, o.vu_minutes, o.groups, o.failures
            );
        }
        out
    }
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Mean and sample standard deviation of profit over replications.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfitSummary {
    pub runs: usize,
    pub profit_mean: f64,
    pub profit_std: f64,
    pub profit_pct_mean: f64,
    pub profit_pct_std: f64,
}

impl ProfitSummary {
    pub fn of<'a>(reports: impl IntoIterator<Item = &'a SimReport>) -> Self {
        let (profit, pct): (Vec<f64>, Vec<f64>) =
            reports.into_iter().map(|r| (r.profit.as_f64(), r.profit_pct())).unzip();
        let (profit_mean, profit_std) = mean_std(&profit);
        let (profit_pct_mean, profit_pct_std) = mean_std(&pct);
        Self { runs: profit.len(), profit_mean, profit_std, profit_pct_mean, profit_pct_std }
    }
}

/// Two policies run on the same seeds.
#[derive(Debug, Clone, PartialEq)]
pub struct PairedComparison {
    pub runs: usize,
    /// Seeds on which the first policy earned strictly more.
    pub wins: usize,
    pub first_mean: f64,
    pub second_mean: f64,
    /// Relative gain of the first mean over the second, in percent.
    pub gain_pct: f64,
}

impl PairedComparison {
    /// Panics if the two slices are not paired seed by seed.
    pub fn of(first: &[SimReport], second: &[SimReport]) -> Self {
        assert_eq!(first.len(), second.len(), "unpaired comparison");
        assert!(first.iter().zip(second).all(|(a, b)| a.seed == b.seed), "reports are not paired by seed");
        let wins = first.iter().zip(second).filter(|(a, b)| a.profit > b.profit).count();
        let first_mean = ProfitSummary::of(first).profit_mean;
        let second_mean = ProfitSummary::of(second).profit_mean;
        let gain_pct = if second_mean == 0.0 { 0.0 } else { 100.0 * (first_mean - second_mean) / second_mean.abs() };
        Self { runs: first.len(), wins, first_mean, second_mean, gain_pct }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn report(seed: u64, profit: i64) -> SimReport {
        SimReport {
            label: "x".into(),
            seed,
            num_tasks: 0,
            num_vus: 0,
            profit: Money::from_units(profit),
            revenue: Money::ZERO,
            cost: Money::ZERO,
            offered_revenue: Money::from_units(200),
            completed: 0,
            late: 0,
            failed: 0,
            rejected: 0,
            vu_minutes_busy: 0,
            vu_minutes_idle: 0,
            horizon_min: 0,
            ledger: vec![],
            config_digest: 0,
            event_digest: 0,
            events_processed: 0,
            event_log: None,
        }
    }

    #[test]
    fn summary_uses_sample_deviation() {
        let rs = [
            report(1, 2),
            report(2, 4),
            report(3, 4),
            report(4, 4),
            report(5, 5),
            report(6, 5),
            report(7, 7),
            report(8, 9),
        ];
        let s = ProfitSummary::of(&rs);
        assert_eq!(s.runs, 8);
        assert!((s.profit_mean - 5.0).abs() < 1e-12);
        assert!((s.profit_std - (32.0f64 / 7.0).sqrt()).abs() < 1e-12);
        assert!((s.profit_pct_mean - 2.5).abs() < 1e-12);
    }

    #[test]
    fn single_run_has_zero_spread() {
        let s = ProfitSummary::of(&[report(1, 10)]);
        assert_eq!((s.profit_mean, s.profit_std), (10.0, 0.0));
        assert_eq!(ProfitSummary::of(&[]).runs, 0);
    }

    #[test]
    fn paired_gain() {
        let a = [report(1, 120), report(2, 90)];
        let b = [report(1, 100), report(2, 100)];
        let c = PairedComparison::of(&a, &b);
        assert_eq!((c.runs, c.wins), (2, 1));
        assert!((c.gain_pct - 5.0).abs() < 1e-12);
    }

    #[test]
    #[should_panic(expected = "paired")]
    fn unpaired_seeds_panic() {
        PairedComparison::of(&[report(1, 1)], &[report(2, 1)]);
    }
}
