use std::collections::BTreeMap;

use crate::ids::VertexId;
use crate::model::AbstractDag;

/// Longest-path rank of every abstract vertex, tagged with the DAG version
/// it was computed from.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RankTable {
    ranks: BTreeMap<VertexId, u32>,
    dag_version: u64,
}

impl RankTable {
    pub fn dag_version(&self) -> u64 {
        self.dag_version
    }

    /// Rank of `vertex`; vertices unknown to the table rank 0.
    pub fn rank(&self, vertex: &VertexId) -> u32 {
        self.ranks.get(vertex).copied().unwrap_or(0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&VertexId, u32)> {
        self.ranks.iter().map(|(v, r)| (v, *r))
    }

    pub fn len(&self) -> usize {
        self.ranks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ranks.is_empty()
    }
}

/// Number of edges on the longest path from each vertex to any sink.
///
/// Sinks rank 0; every other vertex ranks one more than its highest-ranked
/// successor. Linear in vertices plus edges.
pub fn compute_ranks(dag: &AbstractDag) -> RankTable {
    let mut ranks = BTreeMap::new();
    for v in dag.topological_order().into_iter().rev() {
        let rank = dag
            .successors(v)
            .map(|s| ranks[s] + 1)
            .max()
            .unwrap_or(0);
        ranks.insert(v.clone(), rank);
    }
    RankTable {
        ranks,
        dag_version: dag.version(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{AbstractVertex, Edge};

    fn build(vertices: &[&str], edges: &[(&str, &str)]) -> AbstractDag {
        let mut dag = AbstractDag::new();
        let vs: Vec<_> = vertices.iter().map(|v| AbstractVertex::new(*v, "")).collect();
        dag.add_vertices(&vs);
        let es: Vec<_> = edges.iter().map(|(a, b)| Edge::new(*a, *b)).collect();
        dag.add_edges(&es).unwrap();
        dag
    }

    #[test]
    fn single_vertex_is_a_sink() {
        let ranks = compute_ranks(&build(&["A"], &[]));
        assert_eq!(ranks.rank(&"A".into()), 0);
    }

    #[test]
    fn chain_ranks_count_down() {
        let names: Vec<String> = (0..6).map(|i| format!("v{i}")).collect();
        let refs: Vec<&str> = names.iter().map(String::as_str).collect();
        let edges: Vec<_> = refs.windows(2).map(|w| (w[0], w[1])).collect();
        let ranks = compute_ranks(&build(&refs, &edges));
        for (i, name) in refs.iter().enumerate() {
            assert_eq!(ranks.rank(&(*name).into()), 5 - i as u32);
        }
    }

    #[test]
    fn example_workflow_ranks() {
        // Frozen from exhaustive path enumeration over this 5-vertex DAG
        // (tests/rank_oracle.rs holds the enumerator).
        let dag = build(
            &["A", "B", "C", "D", "E"],
            &[("A", "B"), ("A", "C"), ("C", "D"), ("B", "E"), ("D", "E")],
        );
        let ranks = compute_ranks(&dag);
        let got: Vec<(&str, u32)> = ranks.iter().map(|(v, r)| (v.as_str(), r)).collect();
        assert_eq!(got, [("A", 3), ("B", 1), ("C", 2), ("D", 1), ("E", 0)]);
        assert_eq!(ranks.dag_version(), dag.version());
    }

    #[test]
    fn version_tracks_dag_changes() {
        let mut dag = build(&["A", "B"], &[]);
        let before = compute_ranks(&dag);
        dag.add_edges(&[Edge::new("A", "B")]).unwrap();
        let after = compute_ranks(&dag);
        assert_ne!(before.dag_version(), after.dag_version());
        assert_eq!(after.rank(&"A".into()), 1);
    }
}
