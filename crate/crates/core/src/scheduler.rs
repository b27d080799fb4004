//! The workflow-aware scheduler.
//!
//! A [`Scheduler`] owns every registered execution, the cluster resource
//! ledger, and the simulated cluster. Public methods post
//! [`SchedulerEvent`]s and drain the event queue before returning, so
//! callers only ever observe the scheduler between events. Alignment rounds
//! run after task submission (outside a batch), batch close, task
//! completion, node (re)addition, and DAG changes.

use std::collections::{BTreeMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::clock::Millis;
use crate::error::{Error, Result};
use crate::ids::{ExecutionId, NodeId, TaskId, VertexId};
use crate::ledger::ResourceLedger;
use crate::log::{LogRecord, ScheduleDecision};
use crate::model::{
    AbstractVertex, Edge, Execution, ExecutionSummary, PhysicalTask, TaskRequest, TaskState,
};
use crate::resources::Millicores;
use crate::sim::{ClusterConfig, SimEvent, SimEventKind, Simulator};
use crate::strategy::{
    assign, baseline_pick, prioritize, CandidateTask, Prioritization, StrategyName,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Outcome {
    Finished,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SchedulerEvent {
    TaskSubmitted { execution: ExecutionId, task: TaskId },
    BatchClosed { execution: ExecutionId, tasks: Vec<TaskId> },
    TaskFinished { execution: ExecutionId, task: TaskId, outcome: Outcome },
    NodeAdded(NodeId),
    NodeRemoved(NodeId),
    DagChanged(ExecutionId),
}

/// Resources the scheduler will use for a submitted task. Currently always
/// equal to the request.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Grant {
    pub cpus: Millicores,
    pub memory_bytes: u64,
    pub runtime_ms: Option<u64>,
}

#[derive(Debug)]
pub struct Scheduler {
    executions: BTreeMap<ExecutionId, Execution>,
    ledger: ResourceLedger,
    sim: Simulator,
    events: VecDeque<SchedulerEvent>,
    log: Vec<LogRecord>,
    decisions: Vec<ScheduleDecision>,
    audit_each_event: bool,
    audit_failures: Vec<String>,
}

impl Scheduler {
    pub fn new(config: &ClusterConfig) -> Result<Self> {
        Ok(Self::with_simulator(Simulator::new(config)?))
    }

    pub fn with_simulator(sim: Simulator) -> Self {
        let mut ledger = ResourceLedger::new();
        for node in sim.nodes() {
            ledger.add_node(node.id.clone(), node.capacity);
        }
        Self {
            executions: BTreeMap::new(),
            ledger,
            sim,
            events: VecDeque::new(),
            log: Vec::new(),
            decisions: Vec::new(),
            audit_each_event: false,
            audit_failures: Vec::new(),
        }
    }

    /// Run a full ledger audit after every processed event and remember any
    /// failure (see [`Scheduler::audit_failures`]).
    pub fn set_audit_each_event(&mut self, on: bool) {
        self.audit_each_event = on;
    }

    pub fn audit_failures(&self) -> &[String] {
        &self.audit_failures
    }

    pub fn now(&self) -> Millis {
        self.sim.now()
    }

    pub fn ledger(&self) -> &ResourceLedger {
        &self.ledger
    }

    pub fn simulator(&self) -> &Simulator {
        &self.sim
    }

    pub fn log(&self) -> &[LogRecord] {
        &self.log
    }

    pub fn take_log(&mut self) -> Vec<LogRecord> {
        std::mem::take(&mut self.log)
    }

    pub fn decisions(&self) -> &[ScheduleDecision] {
        &self.decisions
    }

    pub fn execution(&self, id: &str) -> Result<&Execution> {
        self.executions
            .get(id)
            .ok_or_else(|| Error::UnknownExecution(id.to_owned()))
    }

    fn execution_mut(&mut self, id: &str) -> Result<&mut Execution> {
        self.executions
            .get_mut(id)
            .ok_or_else(|| Error::UnknownExecution(id.to_owned()))
    }

    pub fn executions(&self) -> impl Iterator<Item = &Execution> {
        self.executions.values()
    }

    pub fn task(&self, execution: &str, task: &TaskId) -> Result<&PhysicalTask> {
        self.execution(execution)?
            .task(task)
            .ok_or_else(|| Error::UnknownTask(task.clone()))
    }

    pub fn create_execution(&mut self, id: ExecutionId, strategy: StrategyName, seed: u64) -> Result<&Execution> {
        if self.executions.contains_key(&id) {
            return Err(Error::DuplicateExecution(id));
        }
        let exec = Execution::new(id.clone(), strategy, seed, self.now());
        Ok(self.executions.entry(id).or_insert(exec))
    }

    /// Removes an execution. Tasks not yet placed are withdrawn; running
    /// tasks are cancelled (FAILED) and their resources released.
    pub fn delete_execution(&mut self, id: &str) -> Result<ExecutionSummary> {
        let now = self.now();
        let exec = self
            .executions
            .get_mut(id)
            .ok_or_else(|| Error::UnknownExecution(id.to_owned()))?;
        let live: Vec<TaskId> = exec
            .tasks()
            .filter(|t| !t.state.is_terminal())
            .map(|t| t.id.clone())
            .collect();
        let mut released = false;
        for task_id in live {
            let task = exec.task_mut(&task_id).expect("listed above");
            match task.state {
                TaskState::Submitted | TaskState::Queued => {
                    task.transition(TaskState::Withdrawn, now)?;
                }
                TaskState::Running => {
                    task.transition(TaskState::Failed, now)?;
                    self.sim.cancel(&exec.id, &task_id);
                    self.ledger.release(&(exec.id.clone(), task_id.clone()));
                    released = true;
                }
                // SCHEDULED only exists inside an alignment round.
                _ => unreachable!("task {} in state {}", task_id, task.state),
            }
            let task = exec.task(&task_id).expect("listed above");
            self.log.push(record(&exec.id, task, now));
            exec.remove_from_queues(&task_id);
        }
        let summary = exec.summary();
        self.executions.remove(id);
        if released {
            self.align_all();
        }
        self.pump();
        Ok(summary)
    }

    pub fn add_vertices(&mut self, execution: &str, vertices: &[AbstractVertex]) -> Result<usize> {
        let exec = self.execution_mut(execution)?;
        let added = exec.add_vertices(vertices);
        if added > 0 {
            let id = exec.id.clone();
            self.post(SchedulerEvent::DagChanged(id));
        }
        Ok(added)
    }

    pub fn remove_vertices(&mut self, execution: &str, ids: &[VertexId]) -> Result<usize> {
        let exec = self.execution_mut(execution)?;
        let removed = exec.remove_vertices(ids)?;
        if removed > 0 {
            let id = exec.id.clone();
            self.post(SchedulerEvent::DagChanged(id));
        }
        Ok(removed)
    }

    pub fn add_edges(&mut self, execution: &str, edges: &[Edge]) -> Result<usize> {
        let exec = self.execution_mut(execution)?;
        let added = exec.add_edges(edges)?;
        if added > 0 {
            let id = exec.id.clone();
            self.post(SchedulerEvent::DagChanged(id));
        }
        Ok(added)
    }

    pub fn remove_edges(&mut self, execution: &str, edges: &[Edge]) -> Result<usize> {
        let exec = self.execution_mut(execution)?;
        let removed = exec.remove_edges(edges);
        if removed > 0 {
            let id = exec.id.clone();
            self.post(SchedulerEvent::DagChanged(id));
        }
        Ok(removed)
    }

    pub fn open_batch(&mut self, execution: &str) -> Result<()> {
        self.execution_mut(execution)?.open_batch()
    }

    pub fn close_batch(&mut self, execution: &str) -> Result<()> {
        let exec = self.execution_mut(execution)?;
        let tasks = exec.close_batch()?;
        let id = exec.id.clone();
        self.post(SchedulerEvent::BatchClosed { execution: id, tasks });
        Ok(())
    }

    /// Accepts a physical task. Outside a batch it is queued and an
    /// alignment round runs at once; inside a batch it waits for the close.
    pub fn submit_task(&mut self, execution: &str, task_id: TaskId, request: TaskRequest) -> Result<Grant> {
        let now = self.now();
        let exec = self.execution_mut(execution)?;
        let exec_id = exec.id.clone();
        let task = exec.insert_task(task_id.clone(), request, now)?;
        let grant = Grant {
            cpus: task.request.cpus,
            memory_bytes: task.request.memory_bytes,
            runtime_ms: task.runtime_estimate_ms,
        };
        let rec = record(&exec_id, task, now);
        let held = exec.batch.open;
        self.log.push(rec);
        if !held {
            self.post(SchedulerEvent::TaskSubmitted {
                execution: exec_id,
                task: task_id,
            });
        }
        Ok(grant)
    }

    /// Withdraws a task that has not been placed yet.
    pub fn withdraw_task(&mut self, execution: &str, task_id: &TaskId) -> Result<()> {
        let now = self.now();
        let exec = self.execution_mut(execution)?;
        let exec_id = exec.id.clone();
        let task = exec
            .task_mut(task_id)
            .ok_or_else(|| Error::UnknownTask(task_id.clone()))?;
        if !matches!(task.state, TaskState::Submitted | TaskState::Queued) {
            return Err(Error::TaskNotWithdrawable {
                task: task_id.clone(),
                state: task.state,
            });
        }
        task.transition(TaskState::Withdrawn, now)?;
        let rec = record(&exec_id, task, now);
        exec.remove_from_queues(task_id);
        self.log.push(rec);
        Ok(())
    }

    /// Reports the end of a running task. Normally driven by the simulator;
    /// a pending simulated completion for the task is dropped.
    pub fn complete_task(&mut self, execution: &str, task_id: &TaskId, outcome: Outcome) -> Result<()> {
        let exec = self.execution(execution)?;
        let task = exec
            .task(task_id)
            .ok_or_else(|| Error::UnknownTask(task_id.clone()))?;
        if task.state != TaskState::Running {
            let to = match outcome {
                Outcome::Finished => TaskState::Finished,
                Outcome::Failed => TaskState::Failed,
            };
            return Err(Error::IllegalTransition {
                task: task_id.clone(),
                from: task.state,
                to,
            });
        }
        let id = exec.id.clone();
        self.sim.cancel(&id, task_id);
        self.post(SchedulerEvent::TaskFinished {
            execution: id,
            task: task_id.clone(),
            outcome,
        });
        Ok(())
    }

    /// Takes a node offline (its running tasks fail) or back online.
    pub fn toggle_node(&mut self, node: &NodeId, online: bool) -> Result<()> {
        if !self.sim.set_online(node, online)? {
            return Ok(());
        }
        if online {
            self.post(SchedulerEvent::NodeAdded(node.clone()));
        } else {
            self.fail_tasks_on(node);
            self.post(SchedulerEvent::NodeRemoved(node.clone()));
        }
        Ok(())
    }

    pub fn schedule_toggle(&mut self, at: Millis, node: NodeId, online: bool) -> Result<()> {
        self.sim.schedule_toggle(at, node, online)
    }

    /// No queued events and no open batch anywhere. Alignment rounds leave
    /// no feasible placement behind, so this is the point at which virtual
    /// time may move.
    pub fn is_quiescent(&self) -> bool {
        self.events.is_empty() && self.executions.values().all(|e| !e.batch.open)
    }

    /// Processes the next simulator event and everything it triggers.
    pub fn advance(&mut self) -> Result<SimEvent> {
        let event = self.sim.advance_to_next_event()?;
        match &event.kind {
            SimEventKind::TaskCompletes { execution, task, .. } => {
                self.post(SchedulerEvent::TaskFinished {
                    execution: execution.clone(),
                    task: task.clone(),
                    outcome: Outcome::Finished,
                });
            }
            SimEventKind::NodeToggle { node, online } => {
                let (node, online) = (node.clone(), *online);
                self.toggle_node(&node, online)?;
            }
        }
        Ok(event)
    }

    /// Processes every event due at or before `at`, then moves the clock to
    /// `at`. Used when virtual time follows a wall clock.
    pub fn advance_until(&mut self, at: Millis) -> Result<usize> {
        let mut processed = 0;
        while self.sim.next_event_at().is_some_and(|t| t <= at) {
            self.advance()?;
            processed += 1;
        }
        self.sim.advance_clock_to(at.max(self.now()));
        Ok(processed)
    }

    fn post(&mut self, event: SchedulerEvent) {
        self.events.push_back(event);
        self.pump();
    }

    fn pump(&mut self) {
        while let Some(event) = self.events.pop_front() {
            self.handle(event);
            if self.audit_each_event {
                if let Err(e) = self.ledger.audit() {
                    self.audit_failures.push(e.to_string());
                }
            }
        }
    }

    fn handle(&mut self, event: SchedulerEvent) {
        let now = self.now();
        match event {
            SchedulerEvent::TaskSubmitted { execution, task } => {
                self.queue_tasks(&execution, std::slice::from_ref(&task), now);
                self.align_all();
            }
            SchedulerEvent::BatchClosed { execution, tasks } => {
                self.queue_tasks(&execution, &tasks, now);
                self.align_all();
            }
            SchedulerEvent::TaskFinished {
                execution,
                task,
                outcome,
            } => {
                self.finish_task(&execution, &task, outcome, now);
                self.align_all();
            }
            SchedulerEvent::NodeAdded(_) | SchedulerEvent::DagChanged(_) => self.align_all(),
            SchedulerEvent::NodeRemoved(_) => {}
        }
    }

    fn queue_tasks(&mut self, execution: &ExecutionId, tasks: &[TaskId], now: Millis) {
        let Some(exec) = self.executions.get_mut(execution) else {
            return;
        };
        for id in tasks {
            let Some(task) = exec.task_mut(id) else { continue };
            if task.state != TaskState::Submitted {
                continue;
            }
            task.transition(TaskState::Queued, now)
                .expect("SUBMITTED -> QUEUED is always legal");
            let rec = record(execution, task, now);
            exec.push_queued(id.clone());
            self.log.push(rec);
        }
    }

    fn finish_task(&mut self, execution: &ExecutionId, task_id: &TaskId, outcome: Outcome, now: Millis) {
        let Some(exec) = self.executions.get_mut(execution) else {
            return;
        };
        let Some(task) = exec.task_mut(task_id) else { return };
        if task.state != TaskState::Running {
            return;
        }
        let to = match outcome {
            Outcome::Finished => TaskState::Finished,
            Outcome::Failed => TaskState::Failed,
        };
        task.transition(to, now).expect("RUNNING -> terminal is always legal");
        self.ledger.release(&(execution.clone(), task_id.clone()));
        self.log.push(record(execution, task, now));
    }

    fn fail_tasks_on(&mut self, node: &NodeId) {
        let now = self.now();
        let victims: Vec<_> = self.ledger.allocations_on(node).cloned().collect();
        for key in victims {
            self.sim.cancel(&key.0, &key.1);
            self.ledger.release(&key);
            let Some(exec) = self.executions.get_mut(&key.0) else { continue };
            let Some(task) = exec.task_mut(&key.1) else { continue };
            if task.transition(TaskState::Failed, now).is_ok() {
                self.log.push(record(&key.0, task, now));
            }
        }
    }

    fn align_all(&mut self) {
        let ids: Vec<ExecutionId> = self
            .executions
            .values()
            .filter(|e| !e.queued().is_empty())
            .map(|e| e.id.clone())
            .collect();
        for id in ids {
            self.alignment_round(&id);
        }
    }

    /// Places as many queued tasks of one execution as fit, in strategy
    /// order. Tasks that fit nowhere stay queued; later tasks may still be
    /// placed.
    pub fn alignment_round(&mut self, execution: &ExecutionId) -> Vec<ScheduleDecision> {
        let now = self.now();
        let online = self.sim.online_nodes();
        let mut nodes = self.ledger.snapshots(&online);
        let Some(exec) = self.executions.get_mut(execution) else {
            return Vec::new();
        };
        if exec.queued().is_empty() || nodes.is_empty() {
            return Vec::new();
        }
        let strategy = exec.strategy;
        let needs_rank = strategy.prioritization().uses_rank();
        let ranks = if needs_rank { Some(exec.ranks().clone()) } else { None };
        let candidates: Vec<CandidateTask> = exec
            .queued()
            .iter()
            .filter_map(|id| exec.task(id))
            .map(|t| CandidateTask {
                task_id: t.id.clone(),
                submission_seq: t.submission_seq,
                input_size_bytes: t.input_size(),
                rank: ranks.as_ref().map_or(0, |r| r.rank(&t.abstract_id)),
                request: t.request,
            })
            .collect();
        let order = match strategy {
            StrategyName::BaselineDefault => prioritize(candidates, Prioritization::Fifo, &mut exec.rng),
            StrategyName::Composite { prioritization, .. } => {
                prioritize(candidates, prioritization, &mut exec.rng)
            }
        };

        let mut decisions = Vec::new();
        for cand in order {
            let choice = match strategy {
                StrategyName::BaselineDefault => baseline_pick(&cand, &nodes),
                StrategyName::Composite { assignment, .. } => {
                    assign(&cand, &nodes, assignment, &mut exec.cursor, &mut exec.rng)
                }
            };
            let Some(node) = choice else { continue };
            let key = (exec.id.clone(), cand.task_id.clone());
            self.ledger
                .reserve(key, &node, cand.request)
                .expect("assignment only returns feasible nodes");
            let snap = nodes.iter_mut().find(|n| n.id == node).expect("chosen from snapshots");
            snap.allocated = snap.allocated + cand.request;

            exec.remove_from_queues(&cand.task_id);
            let exec_id = exec.id.clone();
            let task = exec.task_mut(&cand.task_id).expect("queued task exists");
            task.schedule_on(node.clone(), now)
                .expect("QUEUED -> SCHEDULED is always legal");
            let decision = ScheduleDecision {
                execution_id: exec_id.clone(),
                task_id: cand.task_id.clone(),
                node_id: node.clone(),
                decided_at: now,
                queue_wait_ms: now - task.submitted_at,
            };
            self.log.push(record(&exec_id, task, now));

            let runtime = task.runtime_estimate_ms;
            match self.sim.dispatch(&exec_id, &cand.task_id, &node, runtime) {
                Ok(d) => {
                    task.transition(TaskState::Running, d.started_at)
                        .expect("SCHEDULED -> RUNNING is always legal");
                    self.log.push(record(&exec_id, task, d.started_at));
                }
                Err(_) => {
                    // The backend refused the task: it runs for zero time and fails.
                    task.transition(TaskState::Running, now).expect("legal");
                    self.log.push(record(&exec_id, task, now));
                    task.transition(TaskState::Failed, now).expect("legal");
                    self.log.push(record(&exec_id, task, now));
                    self.ledger.release(&(exec_id.clone(), cand.task_id.clone()));
                }
            }
            decisions.push(decision);
        }
        self.decisions.extend(decisions.iter().cloned());
        decisions
    }
}

fn record(execution: &ExecutionId, task: &PhysicalTask, at: Millis) -> LogRecord {
    LogRecord {
        execution_id: execution.clone(),
        task_id: task.id.clone(),
        abstract_id: task.abstract_id.clone(),
        event: task.state,
        node_id: task.assigned_node.clone(),
        timestamp_ms: at,
    }
}
