use std::cmp::{Ordering, Reverse};

use rand::seq::SliceRandom;
use rand::Rng;

use crate::ids::TaskId;
use crate::resources::Resources;

use super::Prioritization;

/// Snapshot of a queued task as seen by the strategies.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CandidateTask {
    pub task_id: TaskId,
    pub submission_seq: u64,
    pub input_size_bytes: u64,
    pub rank: u32,
    pub request: Resources,
}

fn fifo(a: &CandidateTask, b: &CandidateTask) -> Ordering {
    a.submission_seq
        .cmp(&b.submission_seq)
        .then_with(|| a.task_id.cmp(&b.task_id))
}

fn comparator(strategy: Prioritization) -> fn(&CandidateTask, &CandidateTask) -> Ordering {
    match strategy {
        Prioritization::Fifo | Prioritization::Random => fifo,
        Prioritization::SizeDesc => |a, b| {
            b.input_size_bytes
                .cmp(&a.input_size_bytes)
                .then_with(|| fifo(a, b))
        },
        Prioritization::SizeAsc => |a, b| {
            a.input_size_bytes
                .cmp(&b.input_size_bytes)
                .then_with(|| fifo(a, b))
        },
        Prioritization::RankFifo => |a, b| Reverse(a.rank).cmp(&Reverse(b.rank)).then_with(|| fifo(a, b)),
        Prioritization::RankMin => |a, b| {
            Reverse(a.rank)
                .cmp(&Reverse(b.rank))
                .then_with(|| a.input_size_bytes.cmp(&b.input_size_bytes))
                .then_with(|| fifo(a, b))
        },
        Prioritization::RankMax => |a, b| {
            Reverse(a.rank)
                .cmp(&Reverse(b.rank))
                .then_with(|| b.input_size_bytes.cmp(&a.input_size_bytes))
                .then_with(|| fifo(a, b))
        },
    }
}

/// Orders `pending` by `strategy`.
///
/// Every strategy yields a total order: ties fall back to submission
/// sequence, then task id. `Random` first sorts by that order and then
/// shuffles, so the result depends only on the input set and the rng state.
pub fn prioritize<R: Rng + ?Sized>(
    mut pending: Vec<CandidateTask>,
    strategy: Prioritization,
    rng: &mut R,
) -> Vec<CandidateTask> {
    pending.sort_by(comparator(strategy));
    if strategy == Prioritization::Random {
        pending.shuffle(rng);
    }
    pending
}
