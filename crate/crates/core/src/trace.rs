//! Workflow traces: the interchange format replayed by the driver, its
//! validation, and synthetic trace generators.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ids::{TaskId, VertexId};
use crate::model::{AbstractDag, AbstractVertex, Edge, FileSpec, TaskRequest};
use crate::resources::Millicores;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TraceTask {
    pub id: TaskId,
    pub abstract_id: VertexId,
    #[serde(default)]
    pub predecessors: Vec<TaskId>,
    pub runtime_ms: u64,
    pub cpus: Millicores,
    pub memory_bytes: u64,
    #[serde(default)]
    pub input_files: Vec<FileSpec>,
    #[serde(default)]
    pub output_files: Vec<FileSpec>,
}

impl TraceTask {
    pub fn request(&self) -> TaskRequest {
        TaskRequest {
            abstract_id: self.abstract_id.clone(),
            cpus: self.cpus,
            memory_bytes: self.memory_bytes,
            runtime_estimate_ms: Some(self.runtime_ms),
            input_files: self.input_files.clone(),
            output_files: self.output_files.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "camelCase")]
pub enum DagEditOp {
    AddVertex {
        id: VertexId,
        #[serde(default)]
        label: String,
    },
    RemoveVertex {
        id: VertexId,
    },
    AddEdge {
        from: VertexId,
        to: VertexId,
    },
    RemoveEdge {
        from: VertexId,
        to: VertexId,
    },
}

/// DAG changes applied once `after_task` has finished, modeling a
/// conditional that is resolved by that task's result.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct DagEdit {
    pub after_task: TaskId,
    pub ops: Vec<DagEditOp>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct WorkflowTrace {
    pub name: String,
    pub abstract_vertices: Vec<AbstractVertex>,
    #[serde(default)]
    pub abstract_edges: Vec<Edge>,
    pub physical_tasks: Vec<TraceTask>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub dag_edits: Vec<DagEdit>,
}

impl WorkflowTrace {
    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref())?;
        serde_json::from_str(&text)
            .map_err(|e| Error::TraceInvalid(format!("{}: {e}", path.as_ref().display())))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("traces always serialize")
    }

    pub fn task(&self, id: &TaskId) -> Option<&TraceTask> {
        self.physical_tasks.iter().find(|t| &t.id == id)
    }
}

/// Lists everything wrong with a trace; empty means it can be replayed.
pub fn validate_trace(trace: &WorkflowTrace) -> Vec<String> {
    let mut violations = Vec::new();

    let mut dag = AbstractDag::new();
    let mut seen_vertices = BTreeSet::new();
    for v in &trace.abstract_vertices {
        if !seen_vertices.insert(&v.id) {
            violations.push(format!("abstract vertex {} is listed twice", v.id));
        }
    }
    dag.add_vertices(&trace.abstract_vertices);
    for e in &trace.abstract_edges {
        if let Err(err) = dag.add_edges(std::slice::from_ref(e)) {
            violations.push(format!("abstract edge {} -> {}: {err}", e.from, e.to));
        }
    }

    // Vertices that exist at some point during the run.
    let mut known: BTreeSet<&VertexId> = trace.abstract_vertices.iter().map(|v| &v.id).collect();
    for edit in &trace.dag_edits {
        for op in &edit.ops {
            if let DagEditOp::AddVertex { id, .. } = op {
                known.insert(id);
            }
        }
    }

    let mut ids = BTreeSet::new();
    for t in &trace.physical_tasks {
        if !ids.insert(&t.id) {
            violations.push(format!("task {} is listed twice", t.id));
        }
    }
    for t in &trace.physical_tasks {
        if !known.contains(&t.abstract_id) {
            violations.push(format!("task {}: unknown abstractId {}", t.id, t.abstract_id));
        }
        for p in &t.predecessors {
            if !ids.contains(p) {
                violations.push(format!("task {}: unknown predecessor {p}", t.id));
            }
        }
        if t.cpus == Millicores::ZERO {
            violations.push(format!("task {}: cpus must be positive", t.id));
        }
        if t.memory_bytes == 0 {
            violations.push(format!("task {}: memoryBytes must be positive", t.id));
        }
    }
    let stuck = cyclic_tasks(trace);
    if !stuck.is_empty() {
        let names: Vec<&str> = stuck.iter().map(|t| t.as_str()).collect();
        violations.push(format!("physical predecessors form a cycle among {names:?}"));
    }
    for edit in &trace.dag_edits {
        if !ids.contains(&edit.after_task) {
            violations.push(format!("dag edit refers to unknown task {}", edit.after_task));
        }
    }
    violations
}

/// Tasks left over by Kahn's algorithm on the physical predecessor graph.
fn cyclic_tasks(trace: &WorkflowTrace) -> Vec<TaskId> {
    let ids: BTreeSet<&TaskId> = trace.physical_tasks.iter().map(|t| &t.id).collect();
    let mut indegree: BTreeMap<&TaskId, usize> = BTreeMap::new();
    let mut succs: BTreeMap<&TaskId, Vec<&TaskId>> = BTreeMap::new();
    for t in &trace.physical_tasks {
        let preds: BTreeSet<&TaskId> = t.predecessors.iter().filter(|p| ids.contains(p)).collect();
        indegree.insert(&t.id, preds.len());
        for p in preds {
            succs.entry(p).or_default().push(&t.id);
        }
    }
    let mut ready: VecDeque<&TaskId> = indegree
        .iter()
        .filter(|(_, d)| **d == 0)
        .map(|(t, _)| *t)
        .collect();
    while let Some(t) = ready.pop_front() {
        for s in succs.get(t).into_iter().flatten() {
            let d = indegree.get_mut(s).expect("known task");
            *d -= 1;
            if *d == 0 {
                ready.push_back(s);
            }
        }
        indegree.remove(t);
    }
    indegree.into_keys().cloned().collect()
}

const MIB: u64 = 1 << 20;

fn task(id: String, abstract_id: &str, preds: Vec<TaskId>, runtime_ms: u64) -> TraceTask {
    TraceTask {
        id: id.into(),
        abstract_id: abstract_id.into(),
        predecessors: preds,
        runtime_ms,
        cpus: Millicores::from_cores(1),
        memory_bytes: 512 * MIB,
        input_files: Vec::new(),
        output_files: Vec::new(),
    }
}

/// The six-task workflow used throughout the tests: t1 fans out to t2, t3,
/// t4; t5 needs t3 and t4; t6 needs t2 and t5. Every task takes
/// `runtime_ms` and one core.
///
/// Abstract DAG: A -> B, A -> C, C -> D, B -> E, D -> E, with t3 and t4 both
/// instances of C.
pub fn critical_path_example(runtime_ms: u64) -> WorkflowTrace {
    let vertices = ["A", "B", "C", "D", "E"]
        .iter()
        .map(|v| AbstractVertex::new(*v, format!("process {v}")))
        .collect();
    let edges = [("A", "B"), ("A", "C"), ("C", "D"), ("B", "E"), ("D", "E")]
        .iter()
        .map(|(a, b)| Edge::new(*a, *b))
        .collect();
    let t = |id: &str| TaskId::from(id);
    WorkflowTrace {
        name: "critical-path-example".into(),
        abstract_vertices: vertices,
        abstract_edges: edges,
        physical_tasks: vec![
            task("t1".into(), "A", vec![], runtime_ms),
            task("t2".into(), "B", vec![t("t1")], runtime_ms),
            task("t3".into(), "C", vec![t("t1")], runtime_ms),
            task("t4".into(), "C", vec![t("t1")], runtime_ms),
            task("t5".into(), "D", vec![t("t3"), t("t4")], runtime_ms),
            task("t6".into(), "E", vec![t("t2"), t("t5")], runtime_ms),
        ],
        dag_edits: Vec::new(),
    }
}

/// `width` independent tasks between a split and a join.
pub fn fork_join(width: usize, runtime_ms: u64) -> WorkflowTrace {
    let mut tasks = vec![task("split".into(), "split", vec![], runtime_ms)];
    let workers: Vec<TaskId> = (0..width).map(|i| TaskId::from(format!("work{i}"))).collect();
    for w in &workers {
        tasks.push(task(w.to_string(), "work", vec!["split".into()], runtime_ms));
    }
    tasks.push(task("join".into(), "join", workers, runtime_ms));
    WorkflowTrace {
        name: format!("fork-join-{width}"),
        abstract_vertices: ["split", "work", "join"]
            .iter()
            .map(|v| AbstractVertex::new(*v, *v))
            .collect(),
        abstract_edges: vec![Edge::new("split", "work"), Edge::new("work", "join")],
        physical_tasks: tasks,
        dag_edits: Vec::new(),
    }
}

/// A linear chain of `len` tasks, one abstract vertex each.
pub fn chain(len: usize, runtime_ms: u64) -> WorkflowTrace {
    let names: Vec<String> = (0..len).map(|i| format!("s{i}")).collect();
    let tasks = names
        .iter()
        .enumerate()
        .map(|(i, n)| {
            let preds = if i == 0 { vec![] } else { vec![TaskId::from(format!("{}-0", names[i - 1]))] };
            task(format!("{n}-0"), n, preds, runtime_ms)
        })
        .collect();
    WorkflowTrace {
        name: format!("chain-{len}"),
        abstract_vertices: names.iter().map(|n| AbstractVertex::new(n.as_str(), n.as_str())).collect(),
        abstract_edges: names.windows(2).map(|w| Edge::new(w[0].as_str(), w[1].as_str())).collect(),
        physical_tasks: tasks,
        dag_edits: Vec::new(),
    }
}

/// Knobs for [`random_layered`].
#[derive(Debug, Clone, Copy)]
pub struct LayeredParams {
    pub layers: usize,
    /// Abstract vertices per layer, at most.
    pub max_width: usize,
    /// Physical instances per abstract vertex, at most.
    pub max_instances: usize,
    /// Probability of an abstract edge between consecutive-layer vertices.
    pub edge_probability: f64,
    pub runtime_ms: (u64, u64),
    /// Cpu request range in millicores.
    pub millicores: (u64, u64),
    pub memory_bytes: (u64, u64),
}

impl Default for LayeredParams {
    fn default() -> Self {
        Self {
            layers: 5,
            max_width: 4,
            max_instances: 4,
            edge_probability: 0.4,
            runtime_ms: (100, 5000),
            millicores: (250, 2000),
            memory_bytes: (64 * MIB, 2048 * MIB),
        }
    }
}

/// Random layered workflow. Each abstract vertex links to at least one
/// vertex of the previous layer; each physical instance depends on every
/// instance of its abstract predecessors.
pub fn random_layered(name: &str, params: LayeredParams, seed: u64) -> WorkflowTrace {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut layers: Vec<Vec<String>> = Vec::new();
    let mut vertices = Vec::new();
    let mut edges = Vec::new();
    for l in 0..params.layers.max(1) {
        let width = rng.random_range(1..=params.max_width.max(1));
        let layer: Vec<String> = (0..width).map(|i| format!("L{l}V{i}")).collect();
        for v in &layer {
            vertices.push(AbstractVertex::new(v.as_str(), format!("layer {l}")));
            if let Some(prev) = layers.last() {
                let mut linked = false;
                for p in prev {
                    if rng.random_bool(params.edge_probability) {
                        edges.push(Edge::new(p.as_str(), v.as_str()));
                        linked = true;
                    }
                }
                if !linked {
                    let p = &prev[rng.random_range(0..prev.len())];
                    edges.push(Edge::new(p.as_str(), v.as_str()));
                }
            }
        }
        layers.push(layer);
    }

    let mut instances: BTreeMap<&str, Vec<TaskId>> = BTreeMap::new();
    let mut tasks = Vec::new();
    for layer in &layers {
        for v in layer {
            let preds: Vec<TaskId> = edges
                .iter()
                .filter(|e| e.to.as_str() == v)
                .flat_map(|e| instances[e.from.as_str()].iter().cloned())
                .collect();
            let count = rng.random_range(1..=params.max_instances.max(1));
            let mut mine = Vec::new();
            for i in 0..count {
                let id = TaskId::from(format!("{v}-{i}"));
                let size = rng.random_range(0..=64 * MIB);
                tasks.push(TraceTask {
                    id: id.clone(),
                    abstract_id: v.as_str().into(),
                    predecessors: preds.clone(),
                    runtime_ms: rng.random_range(params.runtime_ms.0..=params.runtime_ms.1),
                    cpus: Millicores::new(rng.random_range(params.millicores.0..=params.millicores.1)),
                    memory_bytes: rng.random_range(params.memory_bytes.0..=params.memory_bytes.1),
                    input_files: vec![FileSpec::new(format!("{v}/in{i}"), size)],
                    output_files: vec![FileSpec::new(format!("{v}/out{i}"), size / 2)],
                });
                mine.push(id);
            }
            instances.insert(v.as_str(), mine);
        }
    }
    WorkflowTrace {
        name: name.to_owned(),
        abstract_vertices: vertices,
        abstract_edges: edges,
        physical_tasks: tasks,
        dag_edits: Vec::new(),
    }
}

/// A wide scatter next to one long dependent chain, joined at the end.
///
/// `prepare` fans out to `scatter` instances and to the chain head; the
/// chain has `chain_len` stages, each revealed only when the previous one
/// finishes. Scatter tasks are listed before the chain, so submission-order
/// scheduling lets them crowd out the chain. Runtimes are heterogeneous.
pub fn critical_path_heavy(name: &str, scatter: usize, chain_len: usize, seed: u64) -> WorkflowTrace {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut vertices = vec![
        AbstractVertex::new("prepare", "prepare"),
        AbstractVertex::new("scatter", "scatter"),
        AbstractVertex::new("gather", "gather"),
    ];
    let mut edges = vec![Edge::new("prepare", "scatter"), Edge::new("scatter", "gather")];
    let stages: Vec<String> = (0..chain_len).map(|i| format!("stage{i}")).collect();
    let mut prev = "prepare".to_owned();
    for s in &stages {
        vertices.push(AbstractVertex::new(s.as_str(), "chain stage"));
        edges.push(Edge::new(prev.as_str(), s.as_str()));
        prev = s.clone();
    }
    edges.push(Edge::new(prev.as_str(), "gather"));

    let mut runtime = |lo: u64, hi: u64| rng.random_range(lo..=hi);
    let mut tasks = vec![task("prepare-0".into(), "prepare", vec![], runtime(200, 600))];
    let mut scatter_ids = Vec::new();
    for i in 0..scatter {
        let id = format!("scatter-{i}");
        let mut t = task(id.clone(), "scatter", vec!["prepare-0".into()], runtime(400, 2500));
        t.input_files = vec![FileSpec::new(format!("chunk{i}"), runtime(1, 512) * MIB)];
        tasks.push(t);
        scatter_ids.push(TaskId::from(id));
    }
    let mut prev = TaskId::from("prepare-0");
    for s in &stages {
        let id = TaskId::from(format!("{s}-0"));
        let mut t = task(id.to_string(), s, vec![prev.clone()], runtime(800, 2000));
        t.input_files = vec![FileSpec::new(format!("{s}.in"), runtime(1, 64) * MIB)];
        tasks.push(t);
        prev = id;
    }
    let mut gather_preds = scatter_ids;
    gather_preds.push(prev);
    tasks.push(task("gather-0".into(), "gather", gather_preds, runtime(200, 600)));

    WorkflowTrace {
        name: name.to_owned(),
        abstract_vertices: vertices,
        abstract_edges: edges,
        physical_tasks: tasks,
        dag_edits: Vec::new(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn example_trace_is_valid() {
        assert_eq!(validate_trace(&critical_path_example(1000)), Vec::<String>::new());
    }

    #[test]
    fn cyclic_predecessors_are_one_violation() {
        let mut trace = critical_path_example(1000);
        trace.physical_tasks[0].predecessors.push("t6".into());
        let v = validate_trace(&trace);
        assert_eq!(v.len(), 1, "{v:?}");
        assert!(v[0].contains("cycle"));
    }

    #[test]
    fn unknown_abstract_id_is_one_violation() {
        let mut trace = critical_path_example(1000);
        trace.physical_tasks[2].abstract_id = "Z".into();
        let v = validate_trace(&trace);
        assert_eq!(v.len(), 1, "{v:?}");
        assert!(v[0].contains("unknown abstractId"));
    }

    #[test]
    fn vertices_added_by_edits_count_as_known() {
        let mut trace = critical_path_example(1000);
        trace.physical_tasks[5].abstract_id = "F".into();
        trace.dag_edits.push(DagEdit {
            after_task: "t1".into(),
            ops: vec![DagEditOp::AddVertex {
                id: "F".into(),
                label: String::new(),
            }],
        });
        assert!(validate_trace(&trace).is_empty());
    }

    #[test]
    fn trace_json_round_trips() {
        let mut trace = critical_path_heavy("cp", 4, 3, 9);
        trace.dag_edits.push(DagEdit {
            after_task: "prepare-0".into(),
            ops: vec![DagEditOp::RemoveEdge {
                from: "scatter".into(),
                to: "gather".into(),
            }],
        });
        let back: WorkflowTrace = serde_json::from_str(&trace.to_json()).unwrap();
        assert_eq!(back, trace);
    }

    #[test]
    fn generators_produce_valid_traces() {
        for seed in 0..20 {
            let t = random_layered("r", LayeredParams::default(), seed);
            assert!(validate_trace(&t).is_empty(), "seed {seed}: {:?}", validate_trace(&t));
            let t = critical_path_heavy("c", 10, 4, seed);
            assert!(validate_trace(&t).is_empty());
        }
        assert!(validate_trace(&fork_join(5, 10)).is_empty());
        assert!(validate_trace(&chain(5, 10)).is_empty());
    }

    #[test]
    fn generators_are_seeded() {
        let p = LayeredParams::default();
        assert_eq!(random_layered("r", p, 4), random_layered("r", p, 4));
        assert_ne!(random_layered("r", p, 4), random_layered("r", p, 5));
    }
}
