//! Replays a workflow trace against the scheduler the way a workflow
//! management system would.
//!
//! The driver registers the execution, sends the abstract DAG, then loops:
//! apply DAG edits whose trigger task finished, withdraw tasks on branches
//! the edits cut off, submit newly ready tasks in batches, and poll the
//! state of every unfinished submitted task. A task is only submitted once
//! all its predecessors are FINISHED. When nothing is left the execution is
//! deleted.

use std::collections::{BTreeMap, BTreeSet};

use crate::clock::Millis;
use crate::error::{Error, Result};
use crate::ids::{ExecutionId, NodeId, TaskId, VertexId};
use crate::model::{AbstractVertex, Edge, ExecutionSummary, TaskRequest, TaskState, TaskStatus};
use crate::scheduler::{Grant, Scheduler};
use crate::strategy::StrategyName;
use crate::trace::{validate_trace, DagEditOp, WorkflowTrace};

/// The scheduler interface as seen by a workflow system. Each method is one
/// API call; the number in the comment is its reference number.
pub trait SchedulerClient {
    /// (1)
    fn register(&mut self, execution: &ExecutionId, strategy: StrategyName, seed: u64) -> Result<()>;
    /// (2)
    fn delete_execution(&mut self, execution: &ExecutionId) -> Result<ExecutionSummary>;
    /// (3)
    fn add_vertices(&mut self, execution: &ExecutionId, vertices: &[AbstractVertex]) -> Result<()>;
    /// (4)
    fn remove_vertices(&mut self, execution: &ExecutionId, ids: &[VertexId]) -> Result<()>;
    /// (5)
    fn add_edges(&mut self, execution: &ExecutionId, edges: &[Edge]) -> Result<()>;
    /// (6)
    fn remove_edges(&mut self, execution: &ExecutionId, edges: &[Edge]) -> Result<()>;
    /// (7)
    fn start_batch(&mut self, execution: &ExecutionId) -> Result<()>;
    /// (8)
    fn end_batch(&mut self, execution: &ExecutionId) -> Result<()>;
    /// (9)
    fn submit_task(&mut self, execution: &ExecutionId, task: &TaskId, request: &TaskRequest) -> Result<Grant>;
    /// (10)
    fn task_state(&mut self, execution: &ExecutionId, task: &TaskId) -> Result<TaskStatus>;
    /// (11)
    fn withdraw_task(&mut self, execution: &ExecutionId, task: &TaskId) -> Result<()>;

    /// Blocks until the cluster may have made progress. Not an API call.
    fn wait_for_progress(&mut self) -> Result<()>;
}

/// Client that calls a [`Scheduler`] in the same process and advances its
/// simulated cluster one event at a time whenever the driver waits.
pub struct InProcessClient<'a> {
    scheduler: &'a mut Scheduler,
}

impl<'a> InProcessClient<'a> {
    pub fn new(scheduler: &'a mut Scheduler) -> Self {
        Self { scheduler }
    }
}

impl SchedulerClient for InProcessClient<'_> {
    fn register(&mut self, execution: &ExecutionId, strategy: StrategyName, seed: u64) -> Result<()> {
        self.scheduler.create_execution(execution.clone(), strategy, seed).map(|_| ())
    }

    fn delete_execution(&mut self, execution: &ExecutionId) -> Result<ExecutionSummary> {
        self.scheduler.delete_execution(execution.as_str())
    }

    fn add_vertices(&mut self, execution: &ExecutionId, vertices: &[AbstractVertex]) -> Result<()> {
        self.scheduler.add_vertices(execution.as_str(), vertices).map(|_| ())
    }

    fn remove_vertices(&mut self, execution: &ExecutionId, ids: &[VertexId]) -> Result<()> {
        self.scheduler.remove_vertices(execution.as_str(), ids).map(|_| ())
    }

    fn add_edges(&mut self, execution: &ExecutionId, edges: &[Edge]) -> Result<()> {
        self.scheduler.add_edges(execution.as_str(), edges).map(|_| ())
    }

    fn remove_edges(&mut self, execution: &ExecutionId, edges: &[Edge]) -> Result<()> {
        self.scheduler.remove_edges(execution.as_str(), edges).map(|_| ())
    }

    fn start_batch(&mut self, execution: &ExecutionId) -> Result<()> {
        self.scheduler.open_batch(execution.as_str())
    }

    fn end_batch(&mut self, execution: &ExecutionId) -> Result<()> {
        self.scheduler.close_batch(execution.as_str())
    }

    fn submit_task(&mut self, execution: &ExecutionId, task: &TaskId, request: &TaskRequest) -> Result<Grant> {
        self.scheduler
            .submit_task(execution.as_str(), task.clone(), request.clone())
    }

    fn task_state(&mut self, execution: &ExecutionId, task: &TaskId) -> Result<TaskStatus> {
        self.scheduler.task(execution.as_str(), task).map(TaskStatus::from)
    }

    fn withdraw_task(&mut self, execution: &ExecutionId, task: &TaskId) -> Result<()> {
        self.scheduler.withdraw_task(execution.as_str(), task)
    }

    fn wait_for_progress(&mut self) -> Result<()> {
        debug_assert!(self.scheduler.is_quiescent());
        match self.scheduler.advance() {
            Ok(_) => Ok(()),
            Err(Error::NoPendingEvents) => Err(Error::Stalled("in-process cluster".into())),
            Err(e) => Err(e),
        }
    }
}

#[derive(Debug, Clone)]
pub struct DriverConfig {
    pub execution: ExecutionId,
    pub strategy: StrategyName,
    pub seed: u64,
    /// Most tasks submitted between one start/end batch pair.
    pub batch_size: usize,
}

impl DriverConfig {
    pub fn new(execution: ExecutionId, strategy: StrategyName) -> Self {
        Self {
            execution,
            strategy,
            seed: 0,
            batch_size: usize::MAX,
        }
    }
}

/// Final view of one trace task after a run.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TaskRecord {
    pub id: TaskId,
    pub abstract_id: VertexId,
    pub state: TaskState,
    /// False for tasks cancelled by a DAG edit before they were revealed.
    pub submitted: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub node: Option<NodeId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub submitted_at: Option<Millis>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub started_at: Option<Millis>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub finished_at: Option<Millis>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunResult {
    pub execution: ExecutionId,
    /// Last finish minus first submission.
    pub makespan_ms: Millis,
    /// Trace order.
    pub tasks: Vec<TaskRecord>,
    /// Submitted task ids per batch, in submission order.
    pub batches: Vec<Vec<TaskId>>,
    /// What the scheduler reported on deletion.
    pub summary: ExecutionSummary,
}

impl RunResult {
    pub fn count(&self, state: TaskState) -> usize {
        self.tasks.iter().filter(|t| t.state == state).count()
    }
}

struct RunState<'t> {
    trace: &'t WorkflowTrace,
    status: BTreeMap<TaskId, TaskStatus>,
    /// Cut off by a DAG edit; never submitted from now on.
    cancelled: BTreeSet<TaskId>,
    applied_edits: BTreeSet<usize>,
    pending_vertex_removals: Vec<VertexId>,
    batches: Vec<Vec<TaskId>>,
}

impl RunState<'_> {
    fn is_state(&self, id: &TaskId, state: TaskState) -> bool {
        self.status.get(id).is_some_and(|s| s.state == state)
    }

    fn live(&self) -> impl Iterator<Item = &TaskId> {
        self.status
            .iter()
            .filter(|(_, s)| !s.state.is_terminal())
            .map(|(id, _)| id)
    }

    fn ready(&self) -> Vec<TaskId> {
        self.trace
            .physical_tasks
            .iter()
            .filter(|t| !self.status.contains_key(&t.id) && !self.cancelled.contains(&t.id))
            .filter(|t| t.predecessors.iter().all(|p| self.is_state(p, TaskState::Finished)))
            .map(|t| t.id.clone())
            .collect()
    }

    fn done(&self) -> bool {
        self.trace.physical_tasks.iter().all(|t| {
            self.status.get(&t.id).map_or(self.cancelled.contains(&t.id), |s| s.state.is_terminal())
        })
    }

    /// Tasks on a removed vertex plus everything downstream of them.
    fn cancel_vertex(&mut self, vertex: &VertexId) -> Vec<TaskId> {
        let mut frontier: Vec<TaskId> = self
            .trace
            .physical_tasks
            .iter()
            .filter(|t| &t.abstract_id == vertex && !self.is_state(&t.id, TaskState::Finished))
            .map(|t| t.id.clone())
            .collect();
        let mut newly = Vec::new();
        while let Some(id) = frontier.pop() {
            if !self.cancelled.insert(id.clone()) {
                continue;
            }
            newly.push(id.clone());
            frontier.extend(
                self.trace
                    .physical_tasks
                    .iter()
                    .filter(|t| t.predecessors.contains(&id))
                    .map(|t| t.id.clone()),
            );
        }
        newly
    }
}

/// Runs `trace` to completion through `client`.
///
/// The execution is deleted at the end whether or not the run succeeded.
/// Fails with `ExecutionFailed` if any task ended FAILED.
pub fn run_trace<C: SchedulerClient>(trace: &WorkflowTrace, client: &mut C, config: &DriverConfig) -> Result<RunResult> {
    let violations = validate_trace(trace);
    if !violations.is_empty() {
        return Err(Error::TraceInvalid(violations.join("; ")));
    }
    let exec = &config.execution;
    let batch_size = config.batch_size.max(1);

    client.register(exec, config.strategy, config.seed)?;
    let outcome = drive(trace, client, exec, batch_size);
    let summary = client.delete_execution(exec);
    let state = outcome?;
    let summary = summary?;

    let failed: Vec<TaskId> = state
        .status
        .iter()
        .filter(|(_, s)| s.state == TaskState::Failed)
        .map(|(id, _)| id.clone())
        .collect();
    if !failed.is_empty() {
        return Err(Error::ExecutionFailed {
            execution: exec.to_string(),
            tasks: failed,
        });
    }

    let tasks: Vec<TaskRecord> = trace
        .physical_tasks
        .iter()
        .map(|t| match state.status.get(&t.id) {
            Some(s) => TaskRecord {
                id: t.id.clone(),
                abstract_id: t.abstract_id.clone(),
                state: s.state,
                submitted: true,
                node: s.node.clone(),
                submitted_at: Some(s.submitted_at),
                started_at: s.started_at,
                finished_at: s.finished_at,
            },
            None => TaskRecord {
                id: t.id.clone(),
                abstract_id: t.abstract_id.clone(),
                state: TaskState::Withdrawn,
                submitted: false,
                node: None,
                submitted_at: None,
                started_at: None,
                finished_at: None,
            },
        })
        .collect();
    let first_submit = tasks.iter().filter_map(|t| t.submitted_at).min();
    let last_finish = tasks
        .iter()
        .filter(|t| t.state == TaskState::Finished)
        .filter_map(|t| t.finished_at)
        .max();
    let makespan_ms = match (first_submit, last_finish) {
        (Some(a), Some(b)) => b.saturating_sub(a),
        _ => 0,
    };
    Ok(RunResult {
        execution: exec.clone(),
        makespan_ms,
        tasks,
        batches: state.batches,
        summary,
    })
}

fn drive<'t, C: SchedulerClient>(
    trace: &'t WorkflowTrace,
    client: &mut C,
    exec: &ExecutionId,
    batch_size: usize,
) -> Result<RunState<'t>> {
    client.add_vertices(exec, &trace.abstract_vertices)?;
    if !trace.abstract_edges.is_empty() {
        client.add_edges(exec, &trace.abstract_edges)?;
    }
    let mut st = RunState {
        trace,
        status: BTreeMap::new(),
        cancelled: BTreeSet::new(),
        applied_edits: BTreeSet::new(),
        pending_vertex_removals: Vec::new(),
        batches: Vec::new(),
    };

    loop {
        // (10) poll every submitted task that has not reached a final state.
        let live: Vec<TaskId> = st.live().cloned().collect();
        for id in live {
            let status = client.task_state(exec, &id)?;
            st.status.insert(id, status);
        }
        if st.status.values().any(|s| s.state == TaskState::Failed) {
            return Ok(st);
        }

        apply_due_edits(&mut st, client, exec)?;

        let ready = st.ready();
        if !ready.is_empty() {
            for chunk in ready.chunks(batch_size) {
                client.start_batch(exec)?;
                for id in chunk {
                    let task = trace.task(id).expect("ready tasks come from the trace");
                    client.submit_task(exec, id, &task.request())?;
                    st.status.insert(id.clone(), client_side_submitted());
                }
                client.end_batch(exec)?;
                st.batches.push(chunk.to_vec());
            }
            continue;
        }
        if st.done() {
            break;
        }
        client.wait_for_progress()?;
    }
    retry_vertex_removals(&mut st, client, exec)?;
    Ok(st)
}

/// Placeholder until the first poll reports the real status.
fn client_side_submitted() -> TaskStatus {
    TaskStatus {
        state: TaskState::Submitted,
        node: None,
        submitted_at: 0,
        started_at: None,
        finished_at: None,
    }
}

fn apply_due_edits<C: SchedulerClient>(st: &mut RunState<'_>, client: &mut C, exec: &ExecutionId) -> Result<()> {
    let trace = st.trace;
    for (i, edit) in trace.dag_edits.iter().enumerate() {
        if st.applied_edits.contains(&i) || !st.is_state(&edit.after_task, TaskState::Finished) {
            continue;
        }
        st.applied_edits.insert(i);
        for op in &edit.ops {
            match op {
                DagEditOp::AddVertex { id, label } => {
                    client.add_vertices(exec, &[AbstractVertex::new(id.clone(), label.clone())])?
                }
                DagEditOp::AddEdge { from, to } => {
                    client.add_edges(exec, &[Edge::new(from.clone(), to.clone())])?
                }
                DagEditOp::RemoveEdge { from, to } => {
                    client.remove_edges(exec, &[Edge::new(from.clone(), to.clone())])?
                }
                DagEditOp::RemoveVertex { id } => {
                    for task in st.cancel_vertex(id) {
                        if st.status.get(&task).is_some_and(|s| !s.state.is_terminal()) {
                            // (11) Tasks that already started cannot be withdrawn and run to the end.
                            match client.withdraw_task(exec, &task) {
                                Ok(()) | Err(Error::TaskNotWithdrawable { .. }) => {}
                                Err(e) => return Err(e),
                            }
                            let status = client.task_state(exec, &task)?;
                            st.status.insert(task, status);
                        }
                    }
                    st.pending_vertex_removals.push(id.clone());
                }
            }
        }
    }
    retry_vertex_removals(st, client, exec)
}

/// (4) Vertices are removed once no unfinished submitted task refers to them.
fn retry_vertex_removals<C: SchedulerClient>(st: &mut RunState<'_>, client: &mut C, exec: &ExecutionId) -> Result<()> {
    let pending = std::mem::take(&mut st.pending_vertex_removals);
    for v in pending {
        let in_use = st.live().any(|id| {
            st.trace
                .task(id)
                .is_some_and(|t| t.abstract_id == v)
        });
        if in_use {
            st.pending_vertex_removals.push(v);
        } else {
            client.remove_vertices(exec, std::slice::from_ref(&v))?;
        }
    }
    Ok(())
}
