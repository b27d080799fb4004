use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::clock::Millis;
use crate::error::{Error, Result};
use crate::ids::{ExecutionId, TaskId, VertexId};
use crate::strategy::{compute_ranks, RankTable, RoundRobinCursor, StrategyName};

use super::{AbstractDag, AbstractVertex, Edge, PhysicalTask, TaskRequest, TaskState};

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BatchState {
    pub open: bool,
    /// Tasks submitted while the batch is open, in submission order.
    pub held: Vec<TaskId>,
}

/// Per-task outcome counts reported when an execution is deleted.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExecutionSummary {
    pub finished: usize,
    pub failed: usize,
    pub withdrawn: usize,
}

/// One registered workflow run.
#[derive(Debug, Clone)]
pub struct Execution {
    pub id: ExecutionId,
    pub strategy: StrategyName,
    pub seed: u64,
    pub dag: AbstractDag,
    pub batch: BatchState,
    pub created_at: Millis,
    tasks: BTreeMap<TaskId, PhysicalTask>,
    /// QUEUED tasks, in the order they became QUEUED.
    queue: Vec<TaskId>,
    next_seq: u64,
    ranks: RankTable,
    pub(crate) rng: ChaCha8Rng,
    pub(crate) cursor: RoundRobinCursor,
}

impl Execution {
    pub fn new(id: ExecutionId, strategy: StrategyName, seed: u64, now: Millis) -> Self {
        Self {
            id,
            strategy,
            seed,
            dag: AbstractDag::new(),
            batch: BatchState::default(),
            created_at: now,
            tasks: BTreeMap::new(),
            queue: Vec::new(),
            next_seq: 0,
            ranks: RankTable::default(),
            rng: ChaCha8Rng::seed_from_u64(seed),
            cursor: RoundRobinCursor::default(),
        }
    }

    pub fn task(&self, id: &TaskId) -> Option<&PhysicalTask> {
        self.tasks.get(id)
    }

    pub(crate) fn task_mut(&mut self, id: &TaskId) -> Option<&mut PhysicalTask> {
        self.tasks.get_mut(id)
    }

    pub fn tasks(&self) -> impl Iterator<Item = &PhysicalTask> {
        self.tasks.values()
    }

    pub fn queued(&self) -> &[TaskId] {
        &self.queue
    }

    pub fn summary(&self) -> ExecutionSummary {
        let mut s = ExecutionSummary::default();
        for t in self.tasks.values() {
            match t.state {
                TaskState::Finished => s.finished += 1,
                TaskState::Failed => s.failed += 1,
                TaskState::Withdrawn => s.withdrawn += 1,
                _ => {}
            }
        }
        s
    }

    /// Ranks for the current DAG, recomputed only after the DAG changed.
    pub fn ranks(&mut self) -> &RankTable {
        if self.ranks.dag_version() != self.dag.version() || self.ranks.len() != self.dag.len() {
            self.ranks = compute_ranks(&self.dag);
        }
        &self.ranks
    }

    pub fn add_vertices(&mut self, vertices: &[AbstractVertex]) -> usize {
        self.dag.add_vertices(vertices)
    }

    /// Fails without removing anything if a non-terminal task still refers
    /// to one of the vertices.
    pub fn remove_vertices(&mut self, ids: &[VertexId]) -> Result<usize> {
        if let Some(v) = ids.iter().find(|v| self.vertex_in_use(v)) {
            return Err(Error::VertexInUse(v.clone()));
        }
        Ok(self.dag.remove_vertices(ids))
    }

    fn vertex_in_use(&self, v: &VertexId) -> bool {
        self.tasks
            .values()
            .any(|t| &t.abstract_id == v && !t.state.is_terminal())
    }

    pub fn add_edges(&mut self, edges: &[Edge]) -> Result<usize> {
        self.dag.add_edges(edges)
    }

    pub fn remove_edges(&mut self, edges: &[Edge]) -> usize {
        self.dag.remove_edges(edges)
    }

    pub fn open_batch(&mut self) -> Result<()> {
        if self.batch.open {
            return Err(Error::BatchAlreadyOpen);
        }
        self.batch.open = true;
        Ok(())
    }

    /// Closes the batch and hands back the held tasks in submission order.
    pub fn close_batch(&mut self) -> Result<Vec<TaskId>> {
        if !self.batch.open {
            return Err(Error::NoBatchOpen);
        }
        self.batch.open = false;
        Ok(std::mem::take(&mut self.batch.held))
    }

    /// Registers a new SUBMITTED task. Held in the batch if one is open.
    pub fn insert_task(&mut self, id: TaskId, request: TaskRequest, now: Millis) -> Result<&PhysicalTask> {
        if self.tasks.contains_key(&id) {
            return Err(Error::DuplicateTask(id));
        }
        if !self.dag.contains(&request.abstract_id) {
            return Err(Error::UnknownVertex(request.abstract_id));
        }
        request.validate()?;
        let task = PhysicalTask::new(id.clone(), request, self.next_seq, now);
        self.next_seq += 1;
        if self.batch.open {
            self.batch.held.push(id.clone());
        }
        Ok(self.tasks.entry(id).or_insert(task))
    }

    pub(crate) fn push_queued(&mut self, id: TaskId) {
        self.queue.push(id);
    }

    pub(crate) fn remove_from_queues(&mut self, id: &TaskId) {
        self.queue.retain(|t| t != id);
        self.batch.held.retain(|t| t != id);
    }
}
