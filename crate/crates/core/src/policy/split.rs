use super::{IdleCounts, Mode, PolicyConfig};
use crate::model::{ExecutionPlan, Task};
use crate::reliability::Lut;
use crate::{Minutes, VuClass};

/// Size of the reserved LRT pool given the smoothed number of LRT arrivals
/// per reservation window.
pub fn reserve_target(expected_lrt_arrivals: f64, fraction: f64) -> u32 {
    (fraction * expected_lrt_arrivals.max(0.0)).ceil() as u32
}

/// Smallest redundancy in the class bounds, with at most `available` VUs,
/// whose checkpoints fit the MT99R window and finish the remaining work by
/// the deadline.
///
/// Checkpoints run one after another on a fresh group, so only `x` VUs are
/// needed at once. Between two checkpoints the task waits for the next scan,
/// which is accounted for in the time check. The literal `g · x ≤ available`
/// guard is evaluated and kept on the plan but does not gate acceptance.
pub fn split_task(
    task: &Task,
    class: VuClass,
    available: u32,
    lut: &Lut,
    cfg: &PolicyConfig,
    now: Minutes,
) -> Option<ExecutionPlan> {
    let work = task.remaining_exec_min;
    let (n_min, n_max) = cfg.bounds(class);
    for x in n_min..=n_max {
        let Some(mt) = lut.get(class, x).filter(|&m| m > 0) else {
            continue;
        };
        let g = work.div_ceil(mt);
        let len = work.div_ceil(g);
        let finish = now + work + (g - 1) * cfg.scan_period_min;
        if x <= available && finish <= task.deadline_min {
            return Some(ExecutionPlan {
                vu_type: Some(class),
                redundancy: x,
                checkpoints: g as u32,
                checkpoint_len_min: len,
                current_checkpoint: 0,
                persisted_progress_min: task.persisted_min(),
                product_guard_ok: g * x as u64 <= available as u64,
            });
        }
    }
    None
}

/// Class selection in reliability order with a reserved LRT pool of size
/// `t_vu`: critical tasks may dip into the pool, others only see LRT VUs
/// above it. A task that already ran a checkpoint first retries its previous
/// class when the reservation rule allows it.
pub fn vu_requirement(
    task: &Task,
    idle: &IdleCounts,
    t_vu: u32,
    lut: &Lut,
    cfg: &PolicyConfig,
    now: Minutes,
) -> Option<ExecutionPlan> {
    let lrt = idle.get(VuClass::Lrt);
    let lrt_allowed = (task.critical && lrt < t_vu) || lrt > t_vu;
    let try_class = |class| split_task(task, class, idle.get(class), lut, cfg, now);

    if let Some(prev) = task.plan.as_ref().and_then(|p| p.vu_type) {
        if prev != VuClass::Lrt || lrt_allowed {
            if let Some(plan) = try_class(prev) {
                return Some(plan);
            }
        }
    }
    if task.critical && lrt < t_vu {
        if let Some(plan) = try_class(VuClass::Lrt) {
            return Some(plan);
        }
    }
    if lrt > t_vu {
        if let Some(plan) = try_class(VuClass::Lrt) {
            return Some(plan);
        }
    }
    try_class(VuClass::Mrt).or_else(|| try_class(VuClass::Srt))
}

/// Baseline plan: `n_fixed` VUs of any class, one unsplit span.
pub fn sota_plan(task: &Task, idle_total: u32, n_fixed: u32) -> Option<ExecutionPlan> {
    if idle_total < n_fixed {
        return None;
    }
    Some(ExecutionPlan {
        vu_type: None,
        redundancy: n_fixed,
        checkpoints: 1,
        checkpoint_len_min: task.remaining_exec_min,
        current_checkpoint: 0,
        persisted_progress_min: task.persisted_min(),
        product_guard_ok: true,
    })
}

/// Dispatches on the configured mode.
pub fn plan_for(
    task: &Task,
    idle: &IdleCounts,
    t_vu: u32,
    lut: &Lut,
    cfg: &PolicyConfig,
    now: Minutes,
) -> Option<ExecutionPlan> {
    match cfg.mode {
        Mode::Proposed => vu_requirement(task, idle, t_vu, lut, cfg, now),
        Mode::Sota => sota_plan(task, idle.total(), cfg.sota_redundancy),
    }
}
