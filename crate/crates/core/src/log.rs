//! Decision log: one JSON Lines record per task state transition.

use std::io::{self, BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::clock::Millis;
use crate::ids::{ExecutionId, NodeId, TaskId, VertexId};
use crate::model::TaskState;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct LogRecord {
    pub execution_id: ExecutionId,
    pub task_id: TaskId,
    pub abstract_id: VertexId,
    pub event: TaskState,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub node_id: Option<NodeId>,
    pub timestamp_ms: Millis,
}

/// A task-to-node alignment made by an alignment round.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ScheduleDecision {
    pub execution_id: ExecutionId,
    pub task_id: TaskId,
    pub node_id: NodeId,
    pub decided_at: Millis,
    pub queue_wait_ms: Millis,
}

pub fn write_jsonl<W: Write>(records: &[LogRecord], mut out: W) -> io::Result<()> {
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

pub fn read_jsonl<R: BufRead>(input: R) -> io::Result<Vec<LogRecord>> {
    input
        .lines()
        .filter(|l| l.as_ref().map_or(true, |l| !l.trim().is_empty()))
        .map(|line| {
            let line = line?;
            serde_json::from_str(&line).map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))
        })
        .collect()
}

/// `last FINISHED - first SUBMITTED` over the given records, if both exist.
pub fn makespan_from_log<'a>(records: impl IntoIterator<Item = &'a LogRecord>) -> Option<Millis> {
    let mut first_submit: Option<Millis> = None;
    let mut last_finish: Option<Millis> = None;
    for r in records {
        match r.event {
            TaskState::Submitted => {
                first_submit = Some(first_submit.map_or(r.timestamp_ms, |t| t.min(r.timestamp_ms)))
            }
            TaskState::Finished => {
                last_finish = Some(last_finish.map_or(r.timestamp_ms, |t| t.max(r.timestamp_ms)))
            }
            _ => {}
        }
    }
    Some(last_finish? - first_submit?)
}
