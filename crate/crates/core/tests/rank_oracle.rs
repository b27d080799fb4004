//! compute_ranks against exhaustive path enumeration.

use std::collections::BTreeMap;

use cws_core::model::{AbstractDag, AbstractVertex, Edge};
use cws_core::strategy::compute_ranks;
use cws_core::VertexId;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random DAG: edges only go from lower to higher position in a shuffled
/// order, so vertex names carry no hint of the topology.
fn random_dag(rng: &mut impl Rng, max_vertices: usize, p: f64) -> AbstractDag {
    let n = rng.random_range(1..=max_vertices);
    let mut names: Vec<String> = (0..n).map(|i| format!("v{i:02}")).collect();
    names.shuffle(rng);
    let mut dag = AbstractDag::new();
    let vertices: Vec<_> = names.iter().map(|v| AbstractVertex::new(v.as_str(), "")).collect();
    dag.add_vertices(&vertices);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.random_bool(p) {
                edges.push(Edge::new(names[i].as_str(), names[j].as_str()));
            }
        }
    }
    dag.add_edges(&edges).unwrap();
    dag
}

/// Longest path (in edges) from each vertex, by walking every path.
fn enumerate_longest_paths(dag: &AbstractDag) -> BTreeMap<VertexId, u32> {
    fn walk(dag: &AbstractDag, v: &VertexId, depth: u32, best: &mut u32) {
        *best = (*best).max(depth);
        for s in dag.successors(v) {
            walk(dag, s, depth + 1, best);
        }
    }
    dag.vertices()
        .map(|v| {
            let mut best = 0;
            walk(dag, &v.id, 0, &mut best);
            (v.id.clone(), best)
        })
        .collect()
}

#[test]
fn matches_enumeration_on_1000_random_dags() {
    for seed in 0..1000u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dag = random_dag(&mut rng, 12, 0.3);
        let ranks = compute_ranks(&dag);
        let expected = enumerate_longest_paths(&dag);
        assert_eq!(ranks.len(), expected.len(), "seed {seed}");
        for (v, want) in &expected {
            assert_eq!(ranks.rank(v), *want, "seed {seed}, vertex {v}");
        }
    }
}

#[test]
fn example_dag_ranks_match_enumeration() {
    let mut dag = AbstractDag::new();
    let vs: Vec<_> = ["A", "B", "C", "D", "E"].iter().map(|v| AbstractVertex::new(*v, "")).collect();
    dag.add_vertices(&vs);
    let es: Vec<_> = [("A", "B"), ("A", "C"), ("C", "D"), ("B", "E"), ("D", "E")]
        .iter()
        .map(|(a, b)| Edge::new(*a, *b))
        .collect();
    dag.add_edges(&es).unwrap();
    let got: BTreeMap<String, u32> = enumerate_longest_paths(&dag)
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect();
    let frozen: BTreeMap<String, u32> =
        [("A", 3), ("B", 1), ("C", 2), ("D", 1), ("E", 0)].iter().map(|(k, v)| (k.to_string(), *v)).collect();
    assert_eq!(got, frozen);
}

proptest! {
    #[test]
    fn ranks_are_consistent_along_edges(seed in any::<u64>(), p in 0.0f64..0.8) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dag = random_dag(&mut rng, 16, p);
        let ranks = compute_ranks(&dag);
        for v in dag.vertices() {
            let succ: Vec<_> = dag.successors(&v.id).collect();
            let r = ranks.rank(&v.id);
            if succ.is_empty() {
                prop_assert_eq!(r, 0);
            } else {
                let best = succ.iter().map(|s| ranks.rank(s)).max().unwrap();
                prop_assert_eq!(r, best + 1);
            }
        }
    }

    #[test]
    fn dag_stays_acyclic_under_random_mutations(seed in any::<u64>(), steps in 1usize..60) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut dag = AbstractDag::new();
        let pool: Vec<String> = (0..8).map(|i| format!("x{i}")).collect();
        for _ in 0..steps {
            let a = pool[rng.random_range(0..pool.len())].as_str();
            let b = pool[rng.random_range(0..pool.len())].as_str();
            match rng.random_range(0..4) {
                0 => { dag.add_vertices(&[AbstractVertex::new(a, "")]); }
                1 => { dag.remove_vertices(&[VertexId::from(a)]); }
                2 => {
                    let before: Vec<Edge> = dag.edges().collect();
                    if dag.add_edges(&[Edge::new(a, b)]).is_err() {
                        prop_assert_eq!(dag.edges().collect::<Vec<_>>(), before);
                    }
                }
                _ => { dag.remove_edges(&[Edge::new(a, b)]); }
            }
            prop_assert_eq!(dag.topological_order().len(), dag.len());
        }
    }
}
