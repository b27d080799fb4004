use thiserror::Error;

use crate::ids::{ExecutionId, NodeId, TaskId, VertexId};
use crate::model::TaskState;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid execution id {0:?}: expected 1-128 characters from [A-Za-z0-9_-]")]
    InvalidExecutionId(String),
    #[error("execution {0} is already registered")]
    DuplicateExecution(ExecutionId),
    #[error("execution {0} is not registered")]
    UnknownExecution(String),
    #[error("unknown scheduling strategy {0:?}")]
    UnknownStrategy(String),
    #[error("task {task}: illegal transition {from} -> {to}")]
    IllegalTransition {
        task: TaskId,
        from: TaskState,
        to: TaskState,
    },
    #[error("abstract vertex {0} does not exist")]
    UnknownVertex(VertexId),
    #[error("abstract vertex {0} is referenced by a live task")]
    VertexInUse(VertexId),
    #[error("edge {from} -> {to} would create a cycle")]
    WouldCreateCycle { from: VertexId, to: VertexId },
    #[error("a batch is already open")]
    BatchAlreadyOpen,
    #[error("no batch is open")]
    NoBatchOpen,
    #[error("task {0} was already submitted")]
    DuplicateTask(TaskId),
    #[error("task {0} is unknown")]
    UnknownTask(TaskId),
    #[error("task {task} is {state} and can no longer be withdrawn")]
    TaskNotWithdrawable { task: TaskId, state: TaskState },
    #[error("invalid task request: {0}")]
    InvalidTask(String),
    #[error("node {0} is unknown")]
    UnknownNode(NodeId),
    #[error("node {0} is offline")]
    NodeOffline(NodeId),
    #[error("invalid cluster configuration: {0}")]
    InvalidCluster(String),
    #[error("no pending simulation events")]
    NoPendingEvents,
    #[error("invalid trace: {0}")]
    TraceInvalid(String),
    #[error("scheduler rejected the request: {code}: {message}")]
    Api { code: String, message: String },
    #[error("scheduler unreachable: {0}")]
    SchedulerUnreachable(String),
    #[error("execution {execution} failed: task(s) {tasks:?} FAILED")]
    ExecutionFailed {
        execution: String,
        tasks: Vec<TaskId>,
    },
    #[error("execution {0} stalled: tasks remain but nothing can make progress")]
    Stalled(String),
    #[error("no baseline_default runs for trace {0}")]
    MissingBaseline(String),
    #[error("ledger audit failed: {0}")]
    LedgerViolation(String),
    #[error("{0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(err: serde_json::Error) -> Self {
        Error::Io(err.to_string())
    }
}
