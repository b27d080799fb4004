use std::cmp::Ordering;

use rand::Rng;

use crate::ids::{NodeId, TaskId};
use crate::resources::Resources;

use super::{Assignment, CandidateTask};

/// A node's capacity and current allocation at decision time.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeSnapshot {
    pub id: NodeId,
    pub capacity: Resources,
    pub allocated: Resources,
}

impl NodeSnapshot {
    pub fn new(id: impl Into<NodeId>, capacity: Resources) -> Self {
        Self {
            id: id.into(),
            capacity,
            allocated: Resources::ZERO,
        }
    }

    pub fn free(&self) -> Resources {
        self.capacity - self.allocated
    }

    pub fn fits(&self, request: &Resources) -> bool {
        request.fits_within(&self.free())
    }

    /// Utilization after hypothetically adding `request`: the larger of the
    /// cpu and memory fractions.
    fn utilization_with(&self, request: &Resources) -> Fraction {
        let cpu = Fraction::new(
            (self.allocated.cpus + request.cpus).get(),
            self.capacity.cpus.get(),
        );
        let mem = Fraction::new(
            self.allocated.memory_bytes + request.memory_bytes,
            self.capacity.memory_bytes,
        );
        cpu.max(mem)
    }
}

/// Exact non-negative ratio, compared by cross multiplication.
#[derive(Debug, Clone, Copy)]
struct Fraction {
    num: u128,
    den: u128,
}

impl Fraction {
    fn new(num: u64, den: u64) -> Self {
        debug_assert!(den > 0);
        Self {
            num: num as u128,
            den: den.max(1) as u128,
        }
    }
}

impl PartialEq for Fraction {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Fraction {}

impl PartialOrd for Fraction {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Fraction {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.num * other.den).cmp(&(other.num * self.den))
    }
}

/// Position from which round-robin probing resumes.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RoundRobinCursor(usize);

impl RoundRobinCursor {
    pub fn position(self) -> usize {
        self.0
    }
}

/// Picks a node for `task`, or `None` when no node has room.
///
/// `nodes` is the list of online nodes in id order. Only nodes whose free
/// cpu and memory both cover the request are considered.
pub fn assign<R: Rng + ?Sized>(
    task: &CandidateTask,
    nodes: &[NodeSnapshot],
    strategy: Assignment,
    cursor: &mut RoundRobinCursor,
    rng: &mut R,
) -> Option<NodeId> {
    if nodes.is_empty() {
        return None;
    }
    match strategy {
        Assignment::RoundRobin => {
            let n = nodes.len();
            let start = cursor.0 % n;
            let hit = (0..n)
                .map(|k| (start + k) % n)
                .find(|&i| nodes[i].fits(&task.request))?;
            cursor.0 = (hit + 1) % n;
            Some(nodes[hit].id.clone())
        }
        Assignment::Random => {
            let feasible: Vec<&NodeSnapshot> =
                nodes.iter().filter(|n| n.fits(&task.request)).collect();
            if feasible.is_empty() {
                return None;
            }
            Some(feasible[rng.random_range(0..feasible.len())].id.clone())
        }
        Assignment::Fair => nodes
            .iter()
            .filter(|n| n.fits(&task.request))
            .min_by(|a, b| {
                a.utilization_with(&task.request)
                    .cmp(&b.utilization_with(&task.request))
                    .then_with(|| a.id.cmp(&b.id))
            })
            .map(|n| n.id.clone()),
    }
}

/// Placement rule of the emulated default scheduler: the feasible node with
/// the lowest allocated-cpu fraction, ties by node id.
pub fn baseline_pick(task: &CandidateTask, nodes: &[NodeSnapshot]) -> Option<NodeId> {
    nodes
        .iter()
        .filter(|n| n.fits(&task.request))
        .min_by(|a, b| {
            Fraction::new(a.allocated.cpus.get(), a.capacity.cpus.get())
                .cmp(&Fraction::new(b.allocated.cpus.get(), b.capacity.cpus.get()))
                .then_with(|| a.id.cmp(&b.id))
        })
        .map(|n| n.id.clone())
}

/// Emulates the workflow-unaware default scheduler over a whole queue.
///
/// Tasks are taken in submission order and spread by [`baseline_pick`];
/// `nodes` is updated with each placement. Tasks that fit nowhere are
/// skipped. This approximates a spreading default scheduler; it is not a
/// model of any particular one.
pub fn baseline_assign(
    mut pending: Vec<CandidateTask>,
    nodes: &mut [NodeSnapshot],
) -> Vec<(TaskId, NodeId)> {
    pending.sort_by(|a, b| {
        a.submission_seq
            .cmp(&b.submission_seq)
            .then_with(|| a.task_id.cmp(&b.task_id))
    });
    let mut out = Vec::new();
    for task in pending {
        if let Some(node) = baseline_pick(&task, nodes) {
            let snap = nodes.iter_mut().find(|n| n.id == node).expect("picked node exists");
            snap.allocated = snap.allocated + task.request;
            out.push((task.task_id, node));
        }
    }
    out
}
