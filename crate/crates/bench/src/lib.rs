//! Fixtures shared by the benchmarks.

use cws_core::model::{AbstractDag, AbstractVertex, Edge};

/// `layers` x `width` grid where each vertex feeds every vertex of the next
/// layer.
pub fn layered_dag(layers: usize, width: usize) -> AbstractDag {
    let name = |l: usize, i: usize| format!("L{l}V{i}");
    let mut dag = AbstractDag::new();
    let vertices: Vec<_> = (0..layers)
        .flat_map(|l| (0..width).map(move |i| AbstractVertex::new(name(l, i), "")))
        .collect();
    dag.add_vertices(&vertices);
    let edges: Vec<_> = (1..layers)
        .flat_map(|l| {
            (0..width).flat_map(move |i| (0..width).map(move |j| Edge::new(name(l - 1, i), name(l, j))))
        })
        .collect();
    dag.add_edges(&edges).expect("layered graphs are acyclic");
    dag
}
