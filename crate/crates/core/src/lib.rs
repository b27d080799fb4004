//! Workflow-aware scheduling for scientific workflow management systems.
//!
//! The crate holds the scheduler a workflow system talks to (executions,
//! abstract DAG, batching, task lifecycle), the prioritization and node
//! assignment strategies, a discrete-event cluster simulator standing in for
//! the resource manager, a trace-replay driver playing the workflow system,
//! and a harness that compares strategies by makespan.

pub mod clock;
pub mod driver;
pub mod error;
pub mod harness;
pub mod ids;
pub mod ledger;
pub mod log;
pub mod model;
pub mod resources;
pub mod scheduler;
pub mod sim;
pub mod strategy;
pub mod trace;

pub use error::{Error, Result};
pub use ids::{ExecutionId, NodeId, TaskId, VertexId};
pub use model::{AbstractVertex, Edge, FileSpec, TaskRequest, TaskState};
pub use resources::{Millicores, Resources};
pub use scheduler::{Grant, Outcome, Scheduler};
pub use sim::{ClusterConfig, NodeConfig};
pub use strategy::StrategyName;
