use std::cmp::Reverse;
use std::collections::BinaryHeap;

use crate::{Minutes, TaskId, VuId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub(crate) enum EventKind {
    VuDeparture(VuId),
    VuArrival(VuId),
    VuConfigDone(VuId),
    TaskArrival(TaskId),
    RecruitmentDone { task: TaskId, gid: u64 },
    CheckpointDone { task: TaskId, gid: u64, epoch: u64 },
    Scan,
    HorizonEnd,
}

impl EventKind {
    /// Same-minute order: a VU leaving at `t` cannot contribute work at `t`,
    /// and a scan sees everything else that happened at `t`.
    fn priority(self) -> u8 {
        match self {
            EventKind::VuDeparture(_) => 0,
            EventKind::VuArrival(_) | EventKind::VuConfigDone(_) | EventKind::TaskArrival(_) => 1,
            EventKind::RecruitmentDone { .. } => 2,
            EventKind::CheckpointDone { .. } => 3,
            EventKind::Scan => 4,
            EventKind::HorizonEnd => 5,
        }
    }

    fn entity(self) -> u32 {
        match self {
            EventKind::VuDeparture(v) | EventKind::VuArrival(v) | EventKind::VuConfigDone(v) => v,
            EventKind::TaskArrival(t)
            | EventKind::RecruitmentDone { task: t, .. }
            | EventKind::CheckpointDone { task: t, .. } => t,
            EventKind::Scan | EventKind::HorizonEnd => 0,
        }
    }

    pub(crate) fn name(self) -> &'static str {
        match self {
            EventKind::VuDeparture(_) => "vu_departure",
            EventKind::VuArrival(_) => "vu_arrival",
            EventKind::VuConfigDone(_) => "vu_config_done",
            EventKind::TaskArrival(_) => "task_arrival",
            EventKind::RecruitmentDone { .. } => "recruitment_done",
            EventKind::CheckpointDone { .. } => "checkpoint_done",
            EventKind::Scan => "ap_scan",
            EventKind::HorizonEnd => "horizon_end",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
struct Key {
    time: Minutes,
    priority: u8,
    entity: u32,
    seq: u64,
}

#[derive(Debug, Default)]
pub(crate) struct EventQueue {
    heap: BinaryHeap<Reverse<(Key, EventKind)>>,
    seq: u64,
}

impl EventQueue {
    pub(crate) fn push(&mut self, time: Minutes, kind: EventKind) {
        let key = Key { time, priority: kind.priority(), entity: kind.entity(), seq: self.seq };
        self.seq += 1;
        self.heap.push(Reverse((key, kind)));
    }

    pub(crate) fn pop(&mut self) -> Option<(Minutes, EventKind)> {
        self.heap.pop().map(|Reverse((k, e))| (k.time, e))
    }
}
