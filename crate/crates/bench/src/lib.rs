//! Fixtures shared by the benchmarks.

use slb_core::{Family, Graph, LoadState, SpeedProfile};

/// A network with alternating speeds `1, 2, 1, 2, …`.
pub fn network(family: Family) -> (Graph, SpeedProfile) {
    let g = Graph::build(family).expect("benchmark family is valid");
    let speeds: Vec<i64> = (0..g.node_count()).map(|i| 1 + (i % 2) as i64).collect();
    let sp = SpeedProfile::from_integers(&speeds).expect("positive speeds");
    (g, sp)
}

/// `n³` unit tasks on node 0.
pub fn heavy_start(n: usize) -> LoadState {
    LoadState::all_on_one(n, (n as u64).pow(3), 0)
}
