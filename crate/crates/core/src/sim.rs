//! Discrete-event cluster: runs dispatched tasks for their modeled duration.
//!
//! Duration of a task on a node is
//! `startupOverheadMs + round(runtimeEstimateMs * speedFactor)`, optionally
//! scaled by a seeded jitter factor. Events at the same instant are
//! delivered in insertion order.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::clock::{Clock, Millis, VirtualClock};
use crate::error::{Error, Result};
use crate::ids::{ExecutionId, NodeId, TaskId};
use crate::resources::{Millicores, Resources};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct NodeConfig {
    pub id: NodeId,
    pub cpus: Millicores,
    pub memory_bytes: u64,
    #[serde(default = "one")]
    pub speed_factor: f64,
}

fn one() -> f64 {
    1.0
}

impl NodeConfig {
    pub fn new(id: impl Into<NodeId>, cpus: Millicores, memory_bytes: u64, speed_factor: f64) -> Self {
        Self {
            id: id.into(),
            cpus,
            memory_bytes,
            speed_factor,
        }
    }
}

/// Cluster description, read from `--cluster path`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ClusterConfig {
    pub nodes: Vec<NodeConfig>,
    #[serde(default)]
    pub startup_overhead_ms: u64,
}

impl ClusterConfig {
    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref())?;
        let config: ClusterConfig = serde_json::from_str(&text)
            .map_err(|e| Error::InvalidCluster(format!("{}: {e}", path.as_ref().display())))?;
        config.validate()?;
        Ok(config)
    }

    /// `count` identical nodes named `node1..=nodeN`.
    pub fn uniform(count: usize, cpus: Millicores, memory_bytes: u64) -> Self {
        Self {
            nodes: (1..=count)
                .map(|i| NodeConfig::new(format!("node{i}"), cpus, memory_bytes, 1.0))
                .collect(),
            startup_overhead_ms: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.nodes.is_empty() {
            return Err(Error::InvalidCluster("at least one node is required".into()));
        }
        let mut seen = std::collections::BTreeSet::new();
        for n in &self.nodes {
            if !seen.insert(&n.id) {
                return Err(Error::InvalidCluster(format!("duplicate node id {}", n.id)));
            }
            if n.cpus == Millicores::ZERO || n.memory_bytes == 0 {
                return Err(Error::InvalidCluster(format!("node {} needs positive cpus and memory", n.id)));
            }
            if !(n.speed_factor.is_finite() && n.speed_factor > 0.0) {
                return Err(Error::InvalidCluster(format!(
                    "node {} speedFactor must be positive, got {}",
                    n.id, n.speed_factor
                )));
            }
        }
        Ok(())
    }
}

/// Live state of one simulated node.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeState {
    pub id: NodeId,
    pub capacity: Resources,
    pub speed_factor: f64,
    pub online: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SimEventKind {
    TaskCompletes {
        execution: ExecutionId,
        task: TaskId,
        node: NodeId,
    },
    NodeToggle {
        node: NodeId,
        online: bool,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimEvent {
    pub at: Millis,
    pub seq: u64,
    pub kind: SimEventKind,
}

/// Multiplicative runtime noise, uniform in `[1 - amplitude, 1 + amplitude]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jitter {
    pub amplitude: f64,
    pub seed: u64,
}

/// Times assigned to a dispatched task.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Dispatch {
    pub started_at: Millis,
    pub completes_at: Millis,
}

#[derive(Debug, Clone)]
pub struct Simulator {
    clock: VirtualClock,
    nodes: BTreeMap<NodeId, NodeState>,
    startup_overhead_ms: u64,
    queue: BTreeMap<(Millis, u64), SimEventKind>,
    completions: HashMap<(ExecutionId, TaskId), (Millis, u64)>,
    next_seq: u64,
    jitter: Option<(f64, ChaCha8Rng)>,
}

impl Simulator {
    pub fn new(config: &ClusterConfig) -> Result<Self> {
        config.validate()?;
        let nodes = config
            .nodes
            .iter()
            .map(|n| {
                (
                    n.id.clone(),
                    NodeState {
                        id: n.id.clone(),
                        capacity: Resources::new(n.cpus, n.memory_bytes),
                        speed_factor: n.speed_factor,
                        online: true,
                    },
                )
            })
            .collect();
        Ok(Self {
            clock: VirtualClock::new(),
            nodes,
            startup_overhead_ms: config.startup_overhead_ms,
            queue: BTreeMap::new(),
            completions: HashMap::new(),
            next_seq: 0,
            jitter: None,
        })
    }

    pub fn with_jitter(mut self, jitter: Jitter) -> Self {
        assert!((0.0..1.0).contains(&jitter.amplitude), "jitter amplitude must be in [0, 1)");
        self.jitter = Some((jitter.amplitude, ChaCha8Rng::seed_from_u64(jitter.seed)));
        self
    }

    pub fn now(&self) -> Millis {
        self.clock.now_ms()
    }

    pub fn nodes(&self) -> impl Iterator<Item = &NodeState> {
        self.nodes.values()
    }

    pub fn node(&self, id: &NodeId) -> Option<&NodeState> {
        self.nodes.get(id)
    }

    /// Online nodes in id order.
    pub fn online_nodes(&self) -> Vec<NodeId> {
        self.nodes
            .values()
            .filter(|n| n.online)
            .map(|n| n.id.clone())
            .collect()
    }

    pub fn pending_events(&self) -> usize {
        self.queue.len()
    }

    pub fn next_event_at(&self) -> Option<Millis> {
        self.queue.keys().next().map(|(at, _)| *at)
    }

    /// Modeled run time of `runtime_ms` on `node`, without startup overhead.
    pub fn duration_on(&mut self, node: &NodeId, runtime_ms: Option<u64>) -> Result<u64> {
        let state = self.nodes.get(node).ok_or_else(|| Error::UnknownNode(node.clone()))?;
        let mut scaled = runtime_ms.unwrap_or(0) as f64 * state.speed_factor;
        if let Some((amplitude, rng)) = &mut self.jitter {
            scaled *= 1.0 + rng.random_range(-*amplitude..=*amplitude);
        }
        Ok(scaled.round() as u64)
    }

    /// Starts `task` on `node` now; schedules its completion.
    pub fn dispatch(
        &mut self,
        execution: &ExecutionId,
        task: &TaskId,
        node: &NodeId,
        runtime_ms: Option<u64>,
    ) -> Result<Dispatch> {
        match self.nodes.get(node) {
            None => return Err(Error::UnknownNode(node.clone())),
            Some(n) if !n.online => return Err(Error::NodeOffline(node.clone())),
            Some(_) => {}
        }
        let duration = self.duration_on(node, runtime_ms)?;
        let started_at = self.now() + self.startup_overhead_ms;
        let completes_at = started_at + duration;
        let key = self.push(
            completes_at,
            SimEventKind::TaskCompletes {
                execution: execution.clone(),
                task: task.clone(),
                node: node.clone(),
            },
        );
        self.completions.insert((execution.clone(), task.clone()), key);
        Ok(Dispatch {
            started_at,
            completes_at,
        })
    }

    /// Drops the pending completion of a task. Returns whether one existed.
    pub fn cancel(&mut self, execution: &ExecutionId, task: &TaskId) -> bool {
        match self.completions.remove(&(execution.clone(), task.clone())) {
            Some(key) => self.queue.remove(&key).is_some(),
            None => false,
        }
    }

    /// Queues a node going offline or online at virtual time `at`.
    pub fn schedule_toggle(&mut self, at: Millis, node: NodeId, online: bool) -> Result<()> {
        if !self.nodes.contains_key(&node) {
            return Err(Error::UnknownNode(node));
        }
        self.push(at.max(self.now()), SimEventKind::NodeToggle { node, online });
        Ok(())
    }

    /// Flips a node's availability immediately. Returns whether it changed.
    pub fn set_online(&mut self, node: &NodeId, online: bool) -> Result<bool> {
        let state = self
            .nodes
            .get_mut(node)
            .ok_or_else(|| Error::UnknownNode(node.clone()))?;
        let changed = state.online != online;
        state.online = online;
        Ok(changed)
    }

    /// Pops the earliest event and moves the clock to its time.
    pub fn advance_to_next_event(&mut self) -> Result<SimEvent> {
        let ((at, seq), kind) = self.queue.pop_first().ok_or(Error::NoPendingEvents)?;
        if let SimEventKind::TaskCompletes { execution, task, .. } = &kind {
            self.completions.remove(&(execution.clone(), task.clone()));
        }
        self.clock.advance_to(at);
        Ok(SimEvent { at, seq, kind })
    }

    /// Moves the clock forward without processing events. Callers must have
    /// drained every event due at or before `at` first.
    pub fn advance_clock_to(&mut self, at: Millis) {
        debug_assert!(self.next_event_at().is_none_or(|next| next > at));
        self.clock.advance_to(at);
    }

    fn push(&mut self, at: Millis, kind: SimEventKind) -> (Millis, u64) {
        let key = (at, self.next_seq);
        self.next_seq += 1;
        self.queue.insert(key, kind);
        key
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sim(speed: f64, overhead: u64) -> Simulator {
        let mut config = ClusterConfig::uniform(1, Millicores::from_cores(1), 1 << 30);
        config.nodes[0].speed_factor = speed;
        config.startup_overhead_ms = overhead;
        Simulator::new(&config).unwrap()
    }

    fn exec() -> ExecutionId {
        ExecutionId::parse("e").unwrap()
    }

    #[test]
    fn reference_speed_runs_for_the_estimate() {
        let mut s = sim(1.0, 0);
        let d = s.dispatch(&exec(), &"t".into(), &"node1".into(), Some(1000)).unwrap();
        assert_eq!(d, Dispatch { started_at: 0, completes_at: 1000 });
    }

    #[test]
    fn speed_factor_multiplies_duration() {
        let mut s = sim(2.0, 0);
        let d = s.dispatch(&exec(), &"t".into(), &"node1".into(), Some(1000)).unwrap();
        assert_eq!(d.completes_at - d.started_at, 2000);
    }

    #[test]
    fn startup_overhead_delays_start() {
        let mut s = sim(1.0, 500);
        let d = s.dispatch(&exec(), &"t".into(), &"node1".into(), Some(1000)).unwrap();
        assert_eq!(d, Dispatch { started_at: 500, completes_at: 1500 });
    }

    #[test]
    fn missing_estimate_means_zero_runtime() {
        let mut s = sim(3.0, 7);
        let d = s.dispatch(&exec(), &"t".into(), &"node1".into(), None).unwrap();
        assert_eq!(d.completes_at, 7);
    }

    #[test]
    fn events_come_out_in_time_then_insertion_order() {
        let mut s = sim(1.0, 0);
        s.dispatch(&exec(), &"late".into(), &"node1".into(), Some(7)).unwrap();
        s.dispatch(&exec(), &"early".into(), &"node1".into(), Some(4)).unwrap();
        s.dispatch(&exec(), &"tie".into(), &"node1".into(), Some(4)).unwrap();
        let order: Vec<(Millis, String)> = std::iter::from_fn(|| s.advance_to_next_event().ok())
            .map(|e| match e.kind {
                SimEventKind::TaskCompletes { task, .. } => (e.at, task.to_string()),
                other => panic!("{other:?}"),
            })
            .collect();
        assert_eq!(
            order,
            [(4, "early".into()), (4, "tie".into()), (7, "late".to_string())]
        );
        assert_eq!(s.now(), 7);
    }

    #[test]
    fn empty_queue_reports_no_events() {
        assert_eq!(sim(1.0, 0).advance_to_next_event().unwrap_err(), Error::NoPendingEvents);
    }

    #[test]
    fn cancelled_completion_never_fires() {
        let mut s = sim(1.0, 0);
        s.dispatch(&exec(), &"t".into(), &"node1".into(), Some(5)).unwrap();
        assert!(s.cancel(&exec(), &"t".into()));
        assert!(!s.cancel(&exec(), &"t".into()));
        assert_eq!(s.pending_events(), 0);
    }

    #[test]
    fn offline_node_refuses_dispatch() {
        let mut s = sim(1.0, 0);
        s.set_online(&"node1".into(), false).unwrap();
        assert_eq!(
            s.dispatch(&exec(), &"t".into(), &"node1".into(), Some(5)).unwrap_err(),
            Error::NodeOffline("node1".into())
        );
        assert!(s.online_nodes().is_empty());
    }

    #[test]
    fn jitter_is_bounded_and_seeded() {
        let run = || {
            let mut s = sim(1.0, 0).with_jitter(Jitter { amplitude: 0.1, seed: 3 });
            (0..50)
                .map(|i| {
                    let d = s
                        .dispatch(&exec(), &format!("t{i}").into(), &"node1".into(), Some(1000))
                        .unwrap();
                    d.completes_at - d.started_at
                })
                .collect::<Vec<_>>()
        };
        let a = run();
        assert_eq!(a, run());
        assert!(a.iter().all(|d| (900..=1100).contains(d)));
        assert!(a.iter().any(|d| *d != 1000));
    }

    #[test]
    fn config_parses_wire_format() {
        let json = r#"{"nodes":[{"id":"n1","cpus":4,"memoryBytes":1024,"speedFactor":1.5},
                                 {"id":"n2","cpus":0.5,"memoryBytes":1}],"startupOverheadMs":250}"#;
        let c: ClusterConfig = serde_json::from_str(json).unwrap();
        c.validate().unwrap();
        assert_eq!(c.nodes[1].cpus, Millicores::new(500));
        assert_eq!(c.nodes[1].speed_factor, 1.0);
        assert_eq!(c.startup_overhead_ms, 250);
    }

    #[test]
    fn config_validation() {
        let mut c = ClusterConfig::uniform(2, Millicores::from_cores(1), 1);
        c.nodes[1].id = "node1".into();
        assert!(c.validate().is_err());
        let mut c = ClusterConfig::uniform(1, Millicores::from_cores(1), 1);
        c.nodes[0].speed_factor = 0.0;
        assert!(c.validate().is_err());
        c.nodes.clear();
        assert!(c.validate().is_err());
    }
}
