use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ids::VertexId;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AbstractVertex {
    pub id: VertexId,
    #[serde(default)]
    pub label: String,
}

impl AbstractVertex {
    pub fn new(id: impl Into<VertexId>, label: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            label: label.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Edge {
    pub from: VertexId,
    pub to: VertexId,
}

impl Edge {
    pub fn new(from: impl Into<VertexId>, to: impl Into<VertexId>) -> Self {
        Self {
            from: from.into(),
            to: to.into(),
        }
    }
}

/// The workflow's abstract task graph.
///
/// Kept acyclic at all times: edge insertions that would close a cycle are
/// rejected and leave the graph untouched. `version` increases on every
/// effective change so derived data (ranks) can be invalidated.
#[derive(Debug, Clone, Default)]
pub struct AbstractDag {
    vertices: BTreeMap<VertexId, AbstractVertex>,
    successors: BTreeMap<VertexId, BTreeSet<VertexId>>,
    predecessors: BTreeMap<VertexId, BTreeSet<VertexId>>,
    version: u64,
}

impl AbstractDag {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn version(&self) -> u64 {
        self.version
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn contains(&self, id: &VertexId) -> bool {
        self.vertices.contains_key(id)
    }

    pub fn vertex(&self, id: &VertexId) -> Option<&AbstractVertex> {
        self.vertices.get(id)
    }

    /// Vertices in id order.
    pub fn vertices(&self) -> impl Iterator<Item = &AbstractVertex> {
        self.vertices.values()
    }

    pub fn successors(&self, id: &VertexId) -> impl Iterator<Item = &VertexId> {
        self.successors.get(id).into_iter().flatten()
    }

    pub fn predecessors(&self, id: &VertexId) -> impl Iterator<Item = &VertexId> {
        self.predecessors.get(id).into_iter().flatten()
    }

    pub fn edges(&self) -> impl Iterator<Item = Edge> + '_ {
        self.successors
            .iter()
            .flat_map(|(from, tos)| tos.iter().map(move |to| Edge::new(from.clone(), to.clone())))
    }

    pub fn edge_count(&self) -> usize {
        self.successors.values().map(BTreeSet::len).sum()
    }

    pub fn has_edge(&self, from: &VertexId, to: &VertexId) -> bool {
        self.successors.get(from).is_some_and(|s| s.contains(to))
    }

    /// Inserts vertices; ids already present are left as they are.
    /// Returns how many were new.
    pub fn add_vertices<'a>(&mut self, vertices: impl IntoIterator<Item = &'a AbstractVertex>) -> usize {
        let mut added = 0;
        for vertex in vertices {
            if !self.vertices.contains_key(&vertex.id) {
                self.vertices.insert(vertex.id.clone(), vertex.clone());
                added += 1;
            }
        }
        if added > 0 {
            self.version += 1;
        }
        added
    }

    /// Removes vertices and every edge touching them. Absent ids are skipped.
    pub fn remove_vertices<'a>(&mut self, ids: impl IntoIterator<Item = &'a VertexId>) -> usize {
        let mut removed = 0;
        for id in ids {
            if self.vertices.remove(id).is_none() {
                continue;
            }
            removed += 1;
            for to in self.successors.remove(id).unwrap_or_default() {
                if let Some(preds) = self.predecessors.get_mut(&to) {
                    preds.remove(id);
                }
            }
            for from in self.predecessors.remove(id).unwrap_or_default() {
                if let Some(succs) = self.successors.get_mut(&from) {
                    succs.remove(id);
                }
            }
        }
        if removed > 0 {
            self.version += 1;
        }
        removed
    }

    /// Inserts all edges or none of them.
    ///
    /// Fails with `UnknownVertex` if an endpoint is missing and with
    /// `WouldCreateCycle` for the first edge that closes a cycle, counting
    /// the edges earlier in the same list. Existing edges are no-ops.
    pub fn add_edges<'a>(&mut self, edges: impl IntoIterator<Item = &'a Edge>) -> Result<usize> {
        let mut staged = self.clone();
        let mut added = 0;
        for edge in edges {
            if staged.insert_edge(edge)? {
                added += 1;
            }
        }
        if added > 0 {
            staged.version = self.version + 1;
            *self = staged;
        }
        Ok(added)
    }

    fn insert_edge(&mut self, edge: &Edge) -> Result<bool> {
        for end in [&edge.from, &edge.to] {
            if !self.vertices.contains_key(end) {
                return Err(Error::UnknownVertex(end.clone()));
            }
        }
        if self.has_edge(&edge.from, &edge.to) {
            return Ok(false);
        }
        if edge.from == edge.to || self.reaches(&edge.to, &edge.from) {
            return Err(Error::WouldCreateCycle {
                from: edge.from.clone(),
                to: edge.to.clone(),
            });
        }
        self.successors
            .entry(edge.from.clone())
            .or_default()
            .insert(edge.to.clone());
        self.predecessors
            .entry(edge.to.clone())
            .or_default()
            .insert(edge.from.clone());
        Ok(true)
    }

    /// Removes the listed edges; unknown edges are ignored.
    pub fn remove_edges<'a>(&mut self, edges: impl IntoIterator<Item = &'a Edge>) -> usize {
        let mut removed = 0;
        for edge in edges {
            let hit = self
                .successors
                .get_mut(&edge.from)
                .is_some_and(|s| s.remove(&edge.to));
            if hit {
                if let Some(preds) = self.predecessors.get_mut(&edge.to) {
                    preds.remove(&edge.from);
                }
                removed += 1;
            }
        }
        if removed > 0 {
            self.version += 1;
        }
        removed
    }

    /// Whether `target` is reachable from `start` along edges.
    pub fn reaches(&self, start: &VertexId, target: &VertexId) -> bool {
        let mut seen = BTreeSet::new();
        let mut stack = vec![start];
        while let Some(v) = stack.pop() {
            if v == target {
                return true;
            }
            if seen.insert(v) {
                stack.extend(self.successors(v));
            }
        }
        false
    }

    /// Kahn's algorithm; ties resolved by vertex id so the order is stable.
    pub fn topological_order(&self) -> Vec<&VertexId> {
        let mut indegree: BTreeMap<&VertexId, usize> = self
            .vertices
            .keys()
            .map(|v| (v, self.predecessors(v).count()))
            .collect();
        let mut ready: BTreeSet<&VertexId> = indegree
            .iter()
            .filter(|(_, d)| **d == 0)
            .map(|(v, _)| *v)
            .collect();
        let mut order = Vec::with_capacity(self.vertices.len());
        while let Some(v) = ready.pop_first() {
            order.push(v);
            for s in self.successors(v) {
                let d = indegree.get_mut(s).expect("edge endpoint is a vertex");
                *d -= 1;
                if *d == 0 {
                    ready.insert(s);
                }
            }
        }
        debug_assert_eq!(order.len(), self.vertices.len(), "graph must stay acyclic");
        order
    }
}
