use std::fmt;
use std::str::FromStr;

use super::PolicyError;
use crate::model::Task;
use crate::{Money, TaskId};

/// Queue ordering heuristics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Heuristic {
    /// Expected profit `r − K·x·e`, highest first.
    Ep,
    /// Revenue, highest first.
    Rv,
    /// Revenue per execution minute, highest first.
    Rpe,
    /// Earliest deadline first.
    Edd,
    /// Arrival order.
    Fcfs,
    /// Smallest laxity-to-execution ratio first.
    Gus,
}

impl Heuristic {
    pub const ALL: [Heuristic; 6] =
        [Heuristic::Ep, Heuristic::Rv, Heuristic::Rpe, Heuristic::Edd, Heuristic::Fcfs, Heuristic::Gus];

    pub fn tag(self) -> &'static str {
        match self {
            Heuristic::Ep => "EP",
            Heuristic::Rv => "RV",
            Heuristic::Rpe => "RPE",
            Heuristic::Edd => "EDD",
            Heuristic::Fcfs => "FCFS",
            Heuristic::Gus => "GUS",
        }
    }

    /// Sort key where smaller sorts first.
    fn key(self, task: &Task, redundancy: u32, k: Money) -> f64 {
        let e = task.remaining_exec_min;
        match self {
            Heuristic::Ep => -((task.revenue - k.times(redundancy as u64 * e)).milli() as f64),
            Heuristic::Rv => -(task.revenue.milli() as f64),
            Heuristic::Rpe => -(task.revenue.milli() as f64 / task.exec_min as f64),
            Heuristic::Edd => task.deadline_min as f64,
            Heuristic::Fcfs => task.arrival_min as f64,
            Heuristic::Gus => task.laxity_min() as f64 / task.exec_min as f64,
        }
    }
}

impl fmt::Display for Heuristic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Heuristic {
    type Err = PolicyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Heuristic::ALL
            .into_iter()
            .find(|h| h.tag().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| PolicyError::UnknownHeuristic(s.to_string()))
    }
}

/// Task ids in admission order, with the key each was sorted on.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct OrderedQueue {
    pub ids: Vec<TaskId>,
    pub keys: Vec<f64>,
}

impl OrderedQueue {
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }
}

/// Sorts `tasks` by the heuristic's key, breaking ties by arrival then id.
/// `redundancy[i]` is the provisional group size of `tasks[i]`; only EP
/// reads it.
pub fn order_tasks(tasks: &[&Task], heuristic: Heuristic, redundancy: &[u32], k: Money) -> OrderedQueue {
    assert_eq!(tasks.len(), redundancy.len(), "one provisional redundancy per task");
    let mut keyed: Vec<(f64, &Task)> =
        tasks.iter().zip(redundancy).map(|(t, &x)| (heuristic.key(t, x, k), *t)).collect();
    keyed.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.arrival_min.cmp(&b.1.arrival_min)).then(a.1.id.cmp(&b.1.id)));
    OrderedQueue { ids: keyed.iter().map(|(_, t)| t.id).collect(), keys: keyed.iter().map(|(k, _)| *k).collect() }
}
