use std::fmt;

use serde::{Deserialize, Serialize};

use crate::clock::Millis;
use crate::error::{Error, Result};
use crate::ids::{NodeId, TaskId, VertexId};
use crate::resources::{Millicores, Resources};

/// Lifecycle of a physical task.
///
/// ```text
/// SUBMITTED -> QUEUED -> SCHEDULED -> RUNNING -> FINISHED | FAILED
///     \__________\______> WITHDRAWN
/// ```
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum TaskState {
    Submitted,
    Queued,
    Scheduled,
    Running,
    Finished,
    Failed,
    Withdrawn,
}

impl TaskState {
    pub fn can_transition_to(self, to: TaskState) -> bool {
        use TaskState::*;
        matches!(
            (self, to),
            (Submitted, Queued)
                | (Queued, Scheduled)
                | (Scheduled, Running)
                | (Running, Finished)
                | (Running, Failed)
                | (Submitted, Withdrawn)
                | (Queued, Withdrawn)
        )
    }

    pub fn is_terminal(self) -> bool {
        matches!(self, TaskState::Finished | TaskState::Failed | TaskState::Withdrawn)
    }

    /// States in which the task holds a node.
    pub fn has_node(self) -> bool {
        matches!(
            self,
            TaskState::Scheduled | TaskState::Running | TaskState::Finished | TaskState::Failed
        )
    }

    pub fn as_str(self) -> &'static str {
        match self {
            TaskState::Submitted => "SUBMITTED",
            TaskState::Queued => "QUEUED",
            TaskState::Scheduled => "SCHEDULED",
            TaskState::Running => "RUNNING",
            TaskState::Finished => "FINISHED",
            TaskState::Failed => "FAILED",
            TaskState::Withdrawn => "WITHDRAWN",
        }
    }
}

impl fmt::Display for TaskState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct FileSpec {
    pub path: String,
    #[serde(default)]
    pub size_bytes: u64,
}

impl FileSpec {
    pub fn new(path: impl Into<String>, size_bytes: u64) -> Self {
        Self {
            path: path.into(),
            size_bytes,
        }
    }
}

/// Sum of declared input sizes. The one definition of "input size" used by
/// size-based prioritization.
pub fn total_input_size(files: &[FileSpec]) -> u64 {
    files.iter().map(|f| f.size_bytes).sum()
}

/// What the workflow system sends when submitting a task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TaskRequest {
    pub abstract_id: VertexId,
    pub cpus: Millicores,
    pub memory_bytes: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub runtime_estimate_ms: Option<u64>,
    #[serde(default)]
    pub input_files: Vec<FileSpec>,
    #[serde(default)]
    pub output_files: Vec<FileSpec>,
}

impl TaskRequest {
    pub fn validate(&self) -> Result<()> {
        if self.cpus == Millicores::ZERO {
            return Err(Error::InvalidTask("cpus must be positive".into()));
        }
        if self.memory_bytes == 0 {
            return Err(Error::InvalidTask("memoryBytes must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhysicalTask {
    pub id: TaskId,
    pub abstract_id: VertexId,
    pub request: Resources,
    pub runtime_estimate_ms: Option<u64>,
    pub input_files: Vec<FileSpec>,
    pub output_files: Vec<FileSpec>,
    pub state: TaskState,
    /// Position in the execution's submission order.
    pub submission_seq: u64,
    pub submitted_at: Millis,
    pub scheduled_at: Option<Millis>,
    pub started_at: Option<Millis>,
    pub finished_at: Option<Millis>,
    pub assigned_node: Option<NodeId>,
}

impl PhysicalTask {
    pub fn new(id: TaskId, request: TaskRequest, submission_seq: u64, now: Millis) -> Self {
        Self {
            id,
            abstract_id: request.abstract_id,
            request: Resources::new(request.cpus, request.memory_bytes),
            runtime_estimate_ms: request.runtime_estimate_ms,
            input_files: request.input_files,
            output_files: request.output_files,
            state: TaskState::Submitted,
            submission_seq,
            submitted_at: now,
            scheduled_at: None,
            started_at: None,
            finished_at: None,
            assigned_node: None,
        }
    }

    pub fn input_size(&self) -> u64 {
        total_input_size(&self.input_files)
    }

    /// Moves the task to `to`, stamping the matching timestamp with `at`.
    ///
    /// Entering SCHEDULED needs a node; use [`PhysicalTask::schedule_on`].
    pub fn transition(&mut self, to: TaskState, at: Millis) -> Result<()> {
        if to == TaskState::Scheduled {
            return Err(self.illegal(to));
        }
        self.check(to)?;
        match to {
            TaskState::Running => self.started_at = Some(at.max(self.submitted_at)),
            TaskState::Finished | TaskState::Failed => {
                let floor = self.started_at.unwrap_or(self.submitted_at);
                self.finished_at = Some(at.max(floor));
            }
            _ => {}
        }
        self.state = to;
        Ok(())
    }

    pub fn schedule_on(&mut self, node: NodeId, at: Millis) -> Result<()> {
        self.check(TaskState::Scheduled)?;
        self.state = TaskState::Scheduled;
        self.scheduled_at = Some(at.max(self.submitted_at));
        self.assigned_node = Some(node);
        Ok(())
    }

    fn check(&self, to: TaskState) -> Result<()> {
        if self.state.can_transition_to(to) {
            Ok(())
        } else {
            Err(self.illegal(to))
        }
    }

    fn illegal(&self, to: TaskState) -> Error {
        Error::IllegalTransition {
            task: self.id.clone(),
            from: self.state,
            to,
        }
    }
}

/// Externally visible state of a task, as reported by a state query.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TaskStatus {
    pub state: TaskState,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub node: Option<NodeId>,
    pub submitted_at: Millis,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub started_at: Option<Millis>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub finished_at: Option<Millis>,
}

impl From<&PhysicalTask> for TaskStatus {
    fn from(task: &PhysicalTask) -> Self {
        Self {
            state: task.state,
            node: task.assigned_node.clone(),
            submitted_at: task.submitted_at,
            started_at: task.started_at,
            finished_at: task.finished_at,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn task() -> PhysicalTask {
        let request = TaskRequest {
            abstract_id: "C".into(),
            cpus: Millicores::from_cores(1),
            memory_bytes: 1 << 20,
            runtime_estimate_ms: Some(1000),
            input_files: vec![FileSpec::new("a", 10), FileSpec::new("b", 32)],
            output_files: vec![],
        };
        PhysicalTask::new("t3".into(), request, 0, 5)
    }

    #[test]
    fn submitted_to_queued_is_allowed() {
        let mut t = task();
        t.transition(TaskState::Queued, 6).unwrap();
        assert_eq!(t.state, TaskState::Queued);
    }

    #[test]
    fn finished_to_running_is_illegal() {
        let mut t = task();
        t.transition(TaskState::Queued, 6).unwrap();
        t.schedule_on("n1".into(), 6).unwrap();
        t.transition(TaskState::Running, 7).unwrap();
        t.transition(TaskState::Finished, 9).unwrap();
        let err = t.transition(TaskState::Running, 10).unwrap_err();
        assert_eq!(
            err,
            Error::IllegalTransition {
                task: "t3".into(),
                from: TaskState::Finished,
                to: TaskState::Running
            }
        );
        assert_eq!((t.started_at, t.finished_at), (Some(7), Some(9)));
    }

    #[test]
    fn withdrawn_task_has_no_node() {
        let mut t = task();
        t.transition(TaskState::Queued, 6).unwrap();
        t.transition(TaskState::Withdrawn, 6).unwrap();
        assert!(t.assigned_node.is_none());
        assert!(!t.state.has_node());
    }

    #[test]
    fn skipping_states_is_illegal() {
        let mut t = task();
        assert!(t.schedule_on("n1".into(), 6).is_err());
        assert!(t.transition(TaskState::Running, 6).is_err());
        assert!(t.transition(TaskState::Finished, 6).is_err());
    }

    #[test]
    fn state_machine_table() {
        use TaskState::*;
        let all = [Submitted, Queued, Scheduled, Running, Finished, Failed, Withdrawn];
        let allowed: Vec<_> = all
            .iter()
            .flat_map(|a| all.iter().map(move |b| (*a, *b)))
            .filter(|(a, b)| a.can_transition_to(*b))
            .collect();
        assert_eq!(
            allowed,
            vec![
                (Submitted, Queued),
                (Submitted, Withdrawn),
                (Queued, Scheduled),
                (Queued, Withdrawn),
                (Scheduled, Running),
                (Running, Finished),
                (Running, Failed),
            ]
        );
    }

    #[test]
    fn input_size_sums_declared_files() {
        assert_eq!(task().input_size(), 42);
    }
}
