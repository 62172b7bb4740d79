use std::collections::{BTreeSet, HashSet};
use std::fmt::Write as _;

use rand::Rng;

use super::event::{EventKind, EventQueue};
use super::{EngineError, SimConfig, SimReport, TaskOutcome};
use crate::model::{ExecutionPlan, Task, TaskStatus, VehicularUnit, VuState};
use crate::policy::{
    accept_task, classify_task, order_tasks, plan_for, reserve_target, Decision, Heuristic, IdleCounts, Mode,
    VcSnapshot,
};
use crate::reliability::Lut;
use crate::workload::{TaskTrace, VuTrace};
use crate::{rng, Minutes, Money, TaskId, VuClass, VuId};

const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

#[derive(Debug, Clone)]
struct Member {
    vu: VuId,
    /// Work done at `base_time`, in minutes of the current checkpoint.
    base_work: f64,
    base_time: Minutes,
}

#[derive(Debug, Clone)]
struct Group {
    gid: u64,
    vc: usize,
    /// `None` for class-blind baseline groups.
    class: Option<VuClass>,
    len: Minutes,
    members: Vec<Member>,
    recruiter: VuId,
    /// Highest workdone among members that left since the last recruitment.
    departed_work: f64,
    /// Workdone of the most recent leaver; the baseline copies this image.
    last_departed_work: f64,
    pending: u32,
    epoch: u64,
}

#[derive(Debug)]
struct TaskRt {
    task: Task,
    group: Option<Group>,
    busy_minutes: u64,
    groups: u32,
    failures: u32,
    finished: Option<Minutes>,
    late: bool,
    revenue: Money,
}

pub(super) struct Sim<'a> {
    cfg: &'a SimConfig,
    lut: &'a Lut,
    horizon: Minutes,
    vus: Vec<VehicularUnit>,
    vu_vc: Vec<usize>,
    speed: Vec<f64>,
    busy_since: Vec<Minutes>,
    busy_total: u64,
    pools: Vec<[BTreeSet<(Minutes, VuId)>; 3]>,
    tasks: Vec<TaskRt>,
    /// Fresh tasks awaiting admission.
    queue: BTreeSet<TaskId>,
    /// Admitted tasks waiting for the group of their next checkpoint or
    /// for a retry after a failure. Served before `queue` at each scan.
    waiting: BTreeSet<TaskId>,
    open_tasks: usize,
    arrived_tasks: usize,
    arrived_vus: usize,
    events: EventQueue,
    next_gid: u64,
    lrt_arrivals: Vec<u32>,
    lrt_rate: Vec<Option<f64>>,
    t_vu: Vec<u32>,
    log: Option<String>,
    digest: u64,
    processed: u64,
}

impl<'a> Sim<'a> {
    pub(super) fn new(vus: &VuTrace, tasks: &TaskTrace, cfg: &'a SimConfig, lut: &'a Lut) -> Self {
        let num_vcs = cfg.num_vcs as usize;
        let horizon =
            cfg.horizon_min.unwrap_or_else(|| tasks.tasks.iter().map(|t| t.deadline_min).max().unwrap_or(0) + 1440);
        let speed = if cfg.speed_variation {
            let mut r = rng::stream(cfg.seed, rng::SIM);
            (0..vus.len()).map(|_| r.random_range(0.9..=1.1)).collect()
        } else {
            vec![1.0; vus.len()]
        };
        let mut events = EventQueue::default();
        for v in &vus.vus {
            events.push(v.arrival_min, EventKind::VuArrival(v.id));
        }
        for t in &tasks.tasks {
            events.push(t.arrival_min, EventKind::TaskArrival(t.id));
        }
        events.push(0, EventKind::Scan);
        events.push(horizon, EventKind::HorizonEnd);
        Sim {
            cfg,
            lut,
            horizon,
            vus: vus.vus.clone(),
            vu_vc: vus.vus.iter().map(|v| v.id as usize % num_vcs).collect(),
            speed,
            busy_since: vec![0; vus.len()],
            busy_total: 0,
            pools: vec![Default::default(); num_vcs],
            tasks: tasks
                .tasks
                .iter()
                .map(|t| TaskRt {
                    task: t.clone(),
                    group: None,
                    busy_minutes: 0,
                    groups: 0,
                    failures: 0,
                    finished: None,
                    late: false,
                    revenue: Money::ZERO,
                })
                .collect(),
            queue: BTreeSet::new(),
            waiting: BTreeSet::new(),
            open_tasks: tasks.len(),
            arrived_tasks: 0,
            arrived_vus: 0,
            events,
            next_gid: 0,
            lrt_arrivals: vec![0; num_vcs],
            lrt_rate: vec![None; num_vcs],
            t_vu: vec![0; num_vcs],
            log: cfg.record_events.then(|| String::from("time_min,event_type,entity_id,detail\n")),
            digest: 0xcbf2_9ce4_8422_2325,
            processed: 0,
        }
    }

    pub(super) fn run(mut self) -> Result<SimReport, EngineError> {
        let mut end = self.horizon;
        while let Some((t, ev)) = self.events.pop() {
            if t > self.horizon {
                break;
            }
            self.record(t, ev);
            match ev {
                EventKind::VuArrival(v) => self.on_vu_arrival(v),
                EventKind::VuConfigDone(v) => self.on_config_done(v),
                EventKind::VuDeparture(v) => self.on_departure(v, t),
                EventKind::TaskArrival(id) => self.on_task_arrival(id),
                EventKind::RecruitmentDone { task, gid } => self.on_recruitment_done(task, gid, t),
                EventKind::CheckpointDone { task, gid, epoch } => self.on_checkpoint_done(task, gid, epoch, t),
                EventKind::Scan => self.on_scan(t),
                EventKind::HorizonEnd => {
                    end = t;
                    break;
                }
            }
            if self.cfg.check_invariants {
                self.check(t)?;
            }
            if self.open_tasks == 0 && self.arrived_tasks == self.tasks.len() {
                end = t;
                break;
            }
        }
        Ok(self.finish(end))
    }

    fn record(&mut self, t: Minutes, ev: EventKind) {
        self.processed += 1;
        let entity = match ev {
            EventKind::VuDeparture(v) | EventKind::VuArrival(v) | EventKind::VuConfigDone(v) => v,
            EventKind::TaskArrival(id)
            | EventKind::RecruitmentDone { task: id, .. }
            | EventKind::CheckpointDone { task: id, .. } => id,
            EventKind::Scan | EventKind::HorizonEnd => 0,
        };
        for b in t.to_le_bytes().into_iter().chain(entity.to_le_bytes()).chain(ev.name().bytes()) {
            self.digest ^= b as u64;
            self.digest = self.digest.wrapping_mul(FNV_PRIME);
        }
        if let Some(log) = self.log.as_mut() {
            let detail = match ev {
                EventKind::VuDeparture(v) => match self.vus[v as usize].state {
                    VuState::Executing(task) => format!("task={task}"),
                    VuState::Idle => "idle".to_string(),
                    VuState::Configuring => "configuring".to_string(),
                    VuState::Departed => String::new(),
                },
                EventKind::VuArrival(v) => self.vus[v as usize].class.to_string(),
                EventKind::RecruitmentDone { gid, .. } => format!("group={gid}"),
                EventKind::CheckpointDone { gid, .. } => format!("group={gid}"),
                EventKind::Scan => format!("queued={} waiting={}", self.queue.len(), self.waiting.len()),
                _ => String::new(),
            };
            let _ = writeln!(log, "{t},{},{entity},{detail}", ev.name());
        }
    }

    fn pool(&mut self, v: VuId) -> &mut BTreeSet<(Minutes, VuId)> {
        let vu = &self.vus[v as usize];
        &mut self.pools[self.vu_vc[v as usize]][vu.class.index()]
    }

    fn make_idle(&mut self, v: VuId) {
        self.vus[v as usize].state = VuState::Idle;
        let key = (self.vus[v as usize].arrival_min, v);
        self.pool(v).insert(key);
    }

    fn make_busy(&mut self, v: VuId, task: TaskId, t: Minutes) {
        let key = (self.vus[v as usize].arrival_min, v);
        let removed = self.pool(v).remove(&key);
        debug_assert!(removed, "VU {v} was not idle");
        self.vus[v as usize].state = VuState::Executing(task);
        self.busy_since[v as usize] = t;
    }

    fn accrue(&mut self, v: VuId, task: TaskId, t: Minutes) {
        let minutes = t - self.busy_since[v as usize];
        self.busy_total += minutes;
        self.tasks[task as usize].busy_minutes += minutes;
    }

    fn work(&self, m: &Member, len: Minutes, t: Minutes) -> f64 {
        (m.base_work + self.speed[m.vu as usize] * (t - m.base_time) as f64).min(len as f64)
    }

    fn workdone_max(&self, g: &Group, t: Minutes) -> f64 {
        g.members.iter().map(|m| self.work(m, g.len, t)).fold(g.departed_work, f64::max)
    }

    /// Smallest redundancy whose MT99R covers what is left of the
    /// checkpoint, capped at the class maximum.
    fn required(&self, g: &Group, t: Minutes) -> u32 {
        let Some(class) = g.class else {
            return self.cfg.policy.sota_redundancy;
        };
        let remaining = (g.len as f64 - self.workdone_max(g, t)).max(0.0).ceil() as Minutes;
        let (lo, hi) = self.cfg.policy.bounds(class);
        (lo..=hi).find(|&x| self.lut.get(class, x).is_some_and(|m| m >= remaining)).unwrap_or(hi)
    }

    fn schedule_completion(&mut self, task: TaskId) {
        let g = self.tasks[task as usize].group.as_ref().expect("running group");
        let done = g
            .members
            .iter()
            .map(|m| {
                let left = (g.len as f64 - m.base_work).max(0.0);
                m.base_time + (left / self.speed[m.vu as usize]).ceil() as Minutes
            })
            .min()
            .expect("non-empty group");
        let (gid, epoch) = (g.gid, g.epoch + 1);
        self.tasks[task as usize].group.as_mut().unwrap().epoch = epoch;
        self.events.push(done, EventKind::CheckpointDone { task, gid, epoch });
    }

    fn on_vu_arrival(&mut self, v: VuId) {
        self.arrived_vus += 1;
        let vu = &self.vus[v as usize];
        if vu.class == VuClass::Lrt {
            self.lrt_arrivals[self.vu_vc[v as usize]] += 1;
        }
        let (config_done, departure) = (vu.config_done_min, vu.actual_departure_min);
        if vu.is_usable() {
            self.events.push(config_done, EventKind::VuConfigDone(v));
        }
        self.events.push(departure, EventKind::VuDeparture(v));
    }

    fn on_config_done(&mut self, v: VuId) {
        if self.vus[v as usize].state == VuState::Configuring {
            self.make_idle(v);
        }
    }

    fn on_departure(&mut self, v: VuId, t: Minutes) {
        match self.vus[v as usize].state {
            VuState::Idle => {
                let key = (self.vus[v as usize].arrival_min, v);
                self.pool(v).remove(&key);
            }
            VuState::Executing(task) => self.member_left(task, v, t),
            VuState::Configuring | VuState::Departed => {}
        }
        self.vus[v as usize].state = VuState::Departed;
    }

    fn member_left(&mut self, task: TaskId, v: VuId, t: Minutes) {
        self.accrue(v, task, t);
        let mut g = self.tasks[task as usize].group.take().expect("member of a running group");
        let idx = g.members.iter().position(|m| m.vu == v).expect("VU is a member");
        let w = self.work(&g.members[idx], g.len, t);
        g.members.remove(idx);
        g.departed_work = g.departed_work.max(w);
        g.last_departed_work = w;
        if g.members.is_empty() {
            self.fail(task, t);
            return;
        }
        if g.recruiter == v {
            g.recruiter = g.members[0].vu;
        }
        let need = self.required(&g, t).saturating_sub(g.members.len() as u32 + g.pending);
        for _ in 0..need {
            self.events.push(t + self.cfg.t_mttr_min, EventKind::RecruitmentDone { task, gid: g.gid });
        }
        g.pending += need;
        self.tasks[task as usize].group = Some(g);
        self.schedule_completion(task);
    }

    fn fail(&mut self, task: TaskId, t: Minutes) {
        let rt = &mut self.tasks[task as usize];
        rt.failures += 1;
        if self.cfg.policy.mode == Mode::Sota {
            rt.task.remaining_exec_min = rt.task.exec_min;
        }
        if t + rt.task.remaining_exec_min > rt.task.deadline_min {
            rt.task.set_status(TaskStatus::Discarded).expect("running task can be discarded");
            rt.finished = Some(t);
            self.open_tasks -= 1;
        } else {
            rt.task.set_status(TaskStatus::FailedPendingRetry).expect("running task can fail");
            self.waiting.insert(task);
        }
    }

    fn pick_recruit(&self, g: &Group) -> Option<VuId> {
        let pools = &self.pools[g.vc];
        match g.class {
            Some(class) => {
                std::iter::once(&class).chain(class.better()).find_map(|c| pools[c.index()].first().map(|&(_, v)| v))
            }
            None => pools.iter().filter_map(|p| p.first()).min().map(|&(_, v)| v),
        }
    }

    fn on_recruitment_done(&mut self, task: TaskId, gid: u64, t: Minutes) {
        let Some(mut g) = self.tasks[task as usize].group.take() else {
            return;
        };
        if g.gid != gid {
            self.tasks[task as usize].group = Some(g);
            return;
        }
        g.pending -= 1;
        if g.members.len() as u32 + g.pending >= self.required(&g, t) {
            self.tasks[task as usize].group = Some(g);
            return;
        }
        let Some(v) = self.pick_recruit(&g) else {
            if t + self.cfg.t_mttr_min < self.tasks[task as usize].task.deadline_min {
                self.events.push(t + self.cfg.t_mttr_min, EventKind::RecruitmentDone { task, gid });
                g.pending += 1;
            }
            self.tasks[task as usize].group = Some(g);
            return;
        };
        self.make_busy(v, task, t);
        let start = match g.class {
            Some(_) => {
                let wmax = self.workdone_max(&g, t);
                let len = g.len;
                let speed = &self.speed;
                if let Some(r) = g.members.iter_mut().find(|m| m.vu == g.recruiter) {
                    let current = (r.base_work + speed[r.vu as usize] * (t - r.base_time) as f64).min(len as f64);
                    r.base_work = current.max(wmax);
                    r.base_time = t;
                }
                wmax
            }
            None => g.last_departed_work,
        };
        g.members.push(Member { vu: v, base_work: start, base_time: t });
        g.departed_work = 0.0;
        self.tasks[task as usize].group = Some(g);
        self.schedule_completion(task);
    }

    fn on_checkpoint_done(&mut self, task: TaskId, gid: u64, epoch: u64, t: Minutes) {
        match &self.tasks[task as usize].group {
            Some(g) if g.gid == gid && g.epoch == epoch => {}
            _ => return,
        }
        let g = self.tasks[task as usize].group.take().unwrap();
        for m in &g.members {
            self.accrue(m.vu, task, t);
            self.make_idle(m.vu);
        }
        let rt = &mut self.tasks[task as usize];
        rt.task.remaining_exec_min -= g.len;
        let persisted = rt.task.persisted_min();
        if let Some(plan) = rt.task.plan.as_mut() {
            plan.current_checkpoint += 1;
            plan.persisted_progress_min = persisted;
        }
        if rt.task.remaining_exec_min == 0 {
            rt.task.set_status(TaskStatus::Completed).expect("running task can complete");
            rt.finished = Some(t);
            if t <= rt.task.deadline_min {
                rt.revenue = rt.task.revenue;
            } else {
                rt.late = true;
            }
            self.open_tasks -= 1;
        } else {
            self.waiting.insert(task);
        }
    }

    fn on_task_arrival(&mut self, id: TaskId) {
        self.arrived_tasks += 1;
        let critical = classify_task(&self.tasks[id as usize].task, &self.cfg.policy);
        self.tasks[id as usize].task.critical = critical;
        self.queue.insert(id);
    }

    fn update_reserve(&mut self) {
        let p = &self.cfg.policy;
        for vc in 0..self.pools.len() {
            let inst = self.lrt_arrivals[vc] as f64 / p.scan_period_min as f64;
            let rate = match self.lrt_rate[vc] {
                None => inst,
                Some(r) => p.lrt_rate_alpha * inst + (1.0 - p.lrt_rate_alpha) * r,
            };
            self.lrt_rate[vc] = Some(rate);
            self.lrt_arrivals[vc] = 0;
            self.t_vu[vc] = reserve_target(rate * p.reserve_window_min as f64, p.reserved_lrt_fraction);
        }
    }

    fn on_scan(&mut self, t: Minutes) {
        self.update_reserve();
        let next = t + self.cfg.policy.scan_period_min;
        if next <= self.horizon {
            self.events.push(next, EventKind::Scan);
        }
        if self.queue.is_empty() && self.waiting.is_empty() {
            return;
        }
        let mut zone: Vec<VcSnapshot> = self
            .pools
            .iter()
            .zip(&self.t_vu)
            .map(|(p, &t_vu)| VcSnapshot {
                idle: IdleCounts::new([p[0].len() as u32, p[1].len() as u32, p[2].len() as u32]),
                t_vu,
            })
            .collect();
        let mut decisions = self.decide(&self.waiting, &mut zone, t);
        decisions.extend(self.decide(&self.queue, &mut zone, t));
        for d in decisions {
            match d {
                Decision::Reject(id) => self.drop_task(id, TaskStatus::Rejected, t),
                Decision::Discard(id) => self.drop_task(id, TaskStatus::Discarded, t),
                Decision::Admit { task, vc, plan } => self.start_group(task, vc, plan, t),
            }
        }
    }

    /// Orders `ids` by the configured heuristic and runs the acceptance
    /// scan against `zone`, which is updated in place.
    fn decide(&self, ids: &BTreeSet<TaskId>, zone: &mut [VcSnapshot], t: Minutes) -> Vec<Decision> {
        if ids.is_empty() {
            return Vec::new();
        }
        let policy = &self.cfg.policy;
        let refs: Vec<&Task> = ids.iter().map(|&id| &self.tasks[id as usize].task).collect();
        let redundancy: Vec<u32> = if policy.heuristic == Heuristic::Ep {
            let fallback = match policy.mode {
                Mode::Proposed => policy.bounds(VuClass::Srt).0,
                Mode::Sota => policy.sota_redundancy,
            };
            refs.iter()
                .map(|task| {
                    zone.iter()
                        .find_map(|s| plan_for(task, &s.idle, s.t_vu, self.lut, policy, t))
                        .map_or(fallback, |p| p.redundancy)
                })
                .collect()
        } else {
            vec![0; refs.len()]
        };
        let queue = order_tasks(&refs, policy.heuristic, &redundancy, policy.k);
        accept_task(&queue, |id| &self.tasks[id as usize].task, zone, t, self.lut, policy)
    }

    fn drop_task(&mut self, id: TaskId, status: TaskStatus, t: Minutes) {
        self.queue.remove(&id);
        self.waiting.remove(&id);
        let rt = &mut self.tasks[id as usize];
        rt.task.set_status(status).expect("queued task can be dropped");
        rt.finished = Some(t);
        self.open_tasks -= 1;
    }

    fn start_group(&mut self, task: TaskId, vc: usize, plan: ExecutionPlan, t: Minutes) {
        self.queue.remove(&task);
        self.waiting.remove(&task);
        let n = plan.redundancy as usize;
        let picked: Vec<VuId> = match plan.vu_type {
            Some(class) => self.pools[vc][class.index()].iter().take(n).map(|&(_, v)| v).collect(),
            None => {
                let mut all: Vec<(Minutes, VuId)> =
                    self.pools[vc].iter().flat_map(|p| p.iter().take(n).copied()).collect();
                all.sort_unstable();
                all.into_iter().take(n).map(|(_, v)| v).collect()
            }
        };
        assert_eq!(picked.len(), n, "snapshot promised {n} idle VUs");
        for &v in &picked {
            self.make_busy(v, task, t);
        }
        let gid = self.next_gid;
        self.next_gid += 1;
        let rt = &mut self.tasks[task as usize];
        rt.task.set_status(TaskStatus::Running).expect("admitted task can run");
        rt.groups += 1;
        let len = plan.checkpoint_len(0, rt.task.remaining_exec_min);
        rt.task.plan = Some(plan.clone());
        rt.group = Some(Group {
            gid,
            vc,
            class: plan.vu_type,
            len,
            members: picked.iter().map(|&vu| Member { vu, base_work: 0.0, base_time: t }).collect(),
            recruiter: picked[0],
            departed_work: 0.0,
            last_departed_work: 0.0,
            pending: 0,
            epoch: 0,
        });
        self.schedule_completion(task);
    }

    fn check(&self, t: Minutes) -> Result<(), EngineError> {
        let fail = |msg: String| Err(EngineError::Invariant { time: t, msg });
        let arrived = &self.vus[..self.arrived_vus];
        let idle_states = arrived.iter().filter(|v| v.state == VuState::Idle).count();
        let pooled: usize = self.pools.iter().flat_map(|p| p.iter()).map(|s| s.len()).sum();
        if idle_states != pooled {
            return fail(format!("{idle_states} idle VUs but {pooled} in pools"));
        }
        let mut seen = HashSet::new();
        for rt in &self.tasks {
            let Some(g) = &rt.group else { continue };
            if !g.members.iter().any(|m| m.vu == g.recruiter) {
                return fail(format!("task {} recruiter is not a member", rt.task.id));
            }
            for m in &g.members {
                if !seen.insert(m.vu) {
                    return fail(format!("VU {} is in two groups", m.vu));
                }
                if self.vus[m.vu as usize].state != VuState::Executing(rt.task.id) {
                    return fail(format!("VU {} state disagrees with group of task {}", m.vu, rt.task.id));
                }
                let w = self.work(m, g.len, t);
                if !(0.0..=g.len as f64).contains(&w) {
                    return fail(format!("VU {} workdone {w} outside checkpoint", m.vu));
                }
            }
            let retries_over = t + self.cfg.t_mttr_min >= rt.task.deadline_min;
            if g.members.len() as u32 + g.pending < self.required(g, t) && !retries_over {
                return fail(format!("task {} is under-provisioned with nothing pending", rt.task.id));
            }
        }
        let executing = arrived.iter().filter(|v| matches!(v.state, VuState::Executing(_))).count();
        if executing != seen.len() {
            return fail(format!("{executing} executing VUs but {} group members", seen.len()));
        }
        Ok(())
    }

    fn finish(mut self, end: Minutes) -> SimReport {
        for id in 0..self.tasks.len() {
            if let Some(g) = self.tasks[id].group.take() {
                for m in &g.members {
                    self.accrue(m.vu, id as TaskId, end);
                    self.make_idle(m.vu);
                }
            }
            let rt = &mut self.tasks[id];
            if !rt.task.status.is_terminal() {
                let status =
                    if rt.task.status == TaskStatus::Queued { TaskStatus::Rejected } else { TaskStatus::Discarded };
                rt.task.set_status(status).expect("open task can be dropped");
                rt.finished = Some(end);
            }
        }
        let k = self.cfg.policy.k;
        let mut report = SimReport {
            label: self.cfg.policy.label(),
            seed: self.cfg.seed,
            num_tasks: self.tasks.len(),
            num_vus: self.vus.len(),
            profit: Money::ZERO,
            revenue: Money::ZERO,
            cost: k.times(self.busy_total),
            offered_revenue: self.tasks.iter().map(|rt| rt.task.revenue).sum(),
            completed: 0,
            late: 0,
            failed: 0,
            rejected: 0,
            vu_minutes_busy: self.busy_total,
            vu_minutes_idle: 0,
            horizon_min: self.horizon,
            ledger: Vec::with_capacity(self.tasks.len()),
            config_digest: rng::fnv1a(format!("{:?}", self.cfg).as_bytes()),
            event_digest: self.digest,
            events_processed: self.processed,
            event_log: self.log.take(),
        };
        for rt in &self.tasks {
            match rt.task.status {
                TaskStatus::Completed if rt.late => report.late += 1,
                TaskStatus::Completed => report.completed += 1,
                TaskStatus::Rejected => report.rejected += 1,
                _ => report.failed += 1,
            }
            report.revenue += rt.revenue;
            report.ledger.push(TaskOutcome {
                id: rt.task.id,
                status: rt.task.status,
                finished_min: rt.finished,
                late: rt.late,
                revenue: rt.revenue,
                cost: k.times(rt.busy_minutes),
                vu_minutes: rt.busy_minutes,
                groups: rt.groups,
                failures: rt.failures,
            });
        }
        report.profit = report.revenue - report.cost;
        let usable: u64 =
            self.vus.iter().map(|v| v.actual_departure_min.min(self.horizon).saturating_sub(v.config_done_min)).sum();
        report.vu_minutes_idle = usable.saturating_sub(self.busy_total);
        report
    }
}
