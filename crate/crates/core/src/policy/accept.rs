use super::{plan_for, OrderedQueue, PolicyConfig};
use crate::model::{ExecutionPlan, Task, TaskStatus};
use crate::reliability::Lut;
use crate::{Minutes, TaskId, VuClass};

/// Idle, configured VUs per class in one VC.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct IdleCounts {
    by_class: [u32; 3],
    /// VUs claimed by class-blind plans, not yet attributed to a class.
    blind_taken: u32,
}

impl IdleCounts {
    /// Counts in `[SRT, MRT, LRT]` order.
    pub fn new(by_class: [u32; 3]) -> Self {
        Self { by_class, blind_taken: 0 }
    }

    pub fn get(&self, class: VuClass) -> u32 {
        self.by_class[class.index()]
    }

    pub fn total(&self) -> u32 {
        self.by_class.iter().sum::<u32>() - self.blind_taken
    }

    /// Removes the VUs a plan will occupy.
    pub fn take(&mut self, plan: &ExecutionPlan) {
        match plan.vu_type {
            Some(class) => self.by_class[class.index()] -= plan.redundancy,
            None => self.blind_taken += plan.redundancy,
        }
    }
}

/// What one AP sees at scan time.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct VcSnapshot {
    pub idle: IdleCounts,
    /// Reserved LRT pool size.
    pub t_vu: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Decision {
    Admit {
        task: TaskId,
        vc: usize,
        plan: ExecutionPlan,
    },
    /// A fresh task that can no longer meet its deadline.
    Reject(TaskId),
    /// A task with sunk work that can no longer meet its deadline.
    Discard(TaskId),
}

/// Walks the queue in order. Tasks that cannot finish even when started now
/// are dropped; the rest are admitted to the first VC, by id, that can host
/// them. Tasks not mentioned in the result stay queued.
pub fn accept_task<'a, F>(
    queue: &OrderedQueue,
    task_of: F,
    zone: &mut [VcSnapshot],
    now: Minutes,
    lut: &Lut,
    cfg: &PolicyConfig,
) -> Vec<Decision>
where
    F: Fn(TaskId) -> &'a Task,
{
    let mut out = Vec::new();
    for &id in &queue.ids {
        let task = task_of(id);
        if task.deadline_min <= now + task.remaining_exec_min {
            out.push(if task.status == TaskStatus::Queued { Decision::Reject(id) } else { Decision::Discard(id) });
            continue;
        }
        for (vc, snap) in zone.iter_mut().enumerate() {
            if let Some(plan) = plan_for(task, &snap.idle, snap.t_vu, lut, cfg, now) {
                snap.idle.take(&plan);
                out.push(Decision::Admit { task: id, vc, plan });
                break;
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policy::{order_tasks, Heuristic, Mode};
    use crate::reliability::ChainParams;
    use crate::Money;

    fn lut() -> Lut {
        let mut lut = Lut::new();
        for (c, n, m) in [
            (VuClass::Srt, 3, 100),
            (VuClass::Srt, 4, 200),
            (VuClass::Srt, 5, 300),
            (VuClass::Mrt, 2, 300),
            (VuClass::Mrt, 3, 700),
            (VuClass::Mrt, 4, 1500),
            (VuClass::Lrt, 2, 2000),
            (VuClass::Lrt, 3, 5000),
        ] {
            lut.insert(c, n, m, ChainParams::new(n, 100.0, 5), 0.01);
        }
        lut
    }

    fn run(tasks: &[Task], zone: &mut [VcSnapshot], now: Minutes, cfg: &PolicyConfig) -> Vec<Decision> {
        let refs: Vec<&Task> = tasks.iter().collect();
        let q = order_tasks(&refs, cfg.heuristic, &vec![2; tasks.len()], cfg.k);
        accept_task(&q, |id| tasks.iter().find(|t| t.id == id).unwrap(), zone, now, &lut(), cfg)
    }

    #[test]
    fn hopeless_task_is_rejected() {
        let t = Task::new(0, 900, 500, 1400, Money::from_units(10)).unwrap();
        let mut zone = [VcSnapshot { idle: IdleCounts::new([10, 10, 10]), t_vu: 0 }];
        assert_eq!(run(&[t], &mut zone, 1000, &PolicyConfig::default()), vec![Decision::Reject(0)]);
    }

    #[test]
    fn in_progress_task_is_discarded() {
        let mut t = Task::new(0, 0, 500, 1400, Money::from_units(10)).unwrap();
        t.status = TaskStatus::FailedPendingRetry;
        let mut zone = [VcSnapshot::default()];
        assert_eq!(run(&[t], &mut zone, 1000, &PolicyConfig::default()), vec![Decision::Discard(0)]);
    }

    #[test]
    fn unconstrained_admission() {
        let t = Task::new(0, 0, 500, 5000, Money::from_units(10)).unwrap();
        let mut zone = [VcSnapshot { idle: IdleCounts::new([0, 2, 0]), t_vu: 0 }];
        let d = run(&[t], &mut zone, 0, &PolicyConfig::default());
        assert!(matches!(&d[..], [Decision::Admit { task: 0, vc: 0, plan }] if plan.redundancy == 2));
        assert_eq!(zone[0].idle.get(VuClass::Mrt), 0);
    }

    #[test]
    fn scarcity_goes_to_the_better_task() {
        let low = Task::new(0, 0, 500, 5000, Money::from_units(10)).unwrap();
        let high = Task::new(1, 0, 500, 5000, Money::from_units(5000)).unwrap();
        let mut zone = [VcSnapshot { idle: IdleCounts::new([0, 2, 0]), t_vu: 0 }];
        let d = run(&[low, high], &mut zone, 0, &PolicyConfig::default());
        assert_eq!(d.len(), 1);
        assert!(matches!(d[0], Decision::Admit { task: 1, .. }));
    }

    #[test]
    fn later_vcs_are_probed() {
        let t = Task::new(0, 0, 500, 5000, Money::from_units(10)).unwrap();
        let mut zone = [
            VcSnapshot { idle: IdleCounts::new([1, 1, 0]), t_vu: 0 },
            VcSnapshot { idle: IdleCounts::new([0, 3, 0]), t_vu: 0 },
        ];
        let d = run(&[t], &mut zone, 0, &PolicyConfig::default());
        assert!(matches!(d[0], Decision::Admit { vc: 1, .. }));
    }

    #[test]
    fn baseline_is_class_blind() {
        let cfg = PolicyConfig { mode: Mode::Sota, heuristic: Heuristic::Fcfs, ..Default::default() };
        let tasks: Vec<Task> = (0..3).map(|i| Task::new(i, 0, 500, 5000, Money::from_units(10)).unwrap()).collect();
        let mut zone = [VcSnapshot { idle: IdleCounts::new([2, 2, 3]), t_vu: 0 }];
        let d = run(&tasks, &mut zone, 0, &cfg);
        assert_eq!(d.len(), 2);
        assert_eq!(zone[0].idle.total(), 1);
    }
}
