#![allow(dead_code)]

use qrl_core::MultiCostGraph;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random directed multigraph: a spanning cycle (so every pair is reachable)
/// plus `extra` random arcs; costs uniform on `[0, hi)` per dimension.
pub fn random_graph(seed: u64, nodes: usize, extra: usize, k: usize, hi: f64) -> MultiCostGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut arcs = Vec::new();
    let cost = |rng: &mut ChaCha8Rng| (0..k).map(|_| hi * rng.random::<f64>()).collect::<Vec<_>>();
    for u in 0..nodes {
        let c = cost(&mut rng);
        arcs.push((u, (u + 1) % nodes, c));
    }
    for _ in 0..extra {
        let u = rng.random_range(0..nodes);
        let v = rng.random_range(0..nodes);
        if u != v {
            let c = cost(&mut rng);
            arcs.push((u, v, c));
        }
    }
    MultiCostGraph::from_arcs(nodes, k, arcs).expect("valid random graph")
}

/// Same shape as [`random_graph`] with small integer costs, for exact ties.
pub fn random_integer_graph(seed: u64, nodes: usize, extra: usize, k: usize) -> MultiCostGraph {
    let g = random_graph(seed, nodes, extra, k, 1.0);
    g.map_costs(|e| qrl_core::CostVector::new(e.costs.iter().map(|c| (c * 6.0).floor() + 1.0).collect()).unwrap())
        .unwrap()
}
