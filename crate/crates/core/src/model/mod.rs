//! Executions, the abstract DAG, and physical task lifecycle.

mod dag;
mod execution;
mod task;

pub use dag::{AbstractDag, AbstractVertex, Edge};
pub use execution::{BatchState, Execution, ExecutionSummary};
pub use task::{total_input_size, FileSpec, PhysicalTask, TaskRequest, TaskState, TaskStatus};
