//! One-to-all (and all-to-one) shortest-path trees under a composite weight.
//!
//! Ties are resolved deterministically: a node keeps the incoming edge with the
//! smallest id among relaxations whose composite distance agrees within
//! [`EPS`], and the priority queue pops equal distances in node-id order. A
//! node's parent is fixed once the node is settled.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{QrlError, Result};
use crate::graph::{dot, CostVector, EdgeId, MixVector, MultiCostGraph, NodeId, EPS};

/// Composite weight of every edge, indexed by edge id.
#[derive(Debug, Clone)]
pub struct EdgeWeights(Vec<f64>);

impl EdgeWeights {
    /// Weights `sum_i p_i w_i` for a simplex mix.
    pub fn from_mix(graph: &MultiCostGraph, mix: &MixVector) -> Result<Self> {
        Self::from_coefficients(graph, mix.as_slice())
    }

    /// Weights for arbitrary non-negative coefficients (not necessarily summing to 1).
    pub fn from_coefficients(graph: &MultiCostGraph, coeffs: &[f64]) -> Result<Self> {
        if coeffs.len() != graph.k() {
            return Err(QrlError::DimensionMismatch { expected: graph.k(), got: coeffs.len() });
        }
        if coeffs.iter().any(|c| !c.is_finite() || *c < 0.0) {
            return Err(QrlError::InvalidMix(format!("coefficients {coeffs:?} must be non-negative")));
        }
        Ok(EdgeWeights(graph.edges().iter().map(|e| dot(&e.costs, coeffs)).collect()))
    }

    pub fn get(&self, e: EdgeId) -> f64 {
        self.0[e]
    }
}

/// Shortest-path tree rooted at `root`.
///
/// For a forward tree `root` is the source and `parent_edge(v)` is the last
/// edge of the root→v path. For a reverse tree (see [`spf_to`]) `root` is the
/// destination and `parent_edge(v)` is the first edge of the v→root path, i.e.
/// v's next hop.
#[derive(Debug, Clone)]
pub struct SpfTree {
    root: NodeId,
    k: usize,
    parent: Vec<Option<EdgeId>>,
    dist: Vec<f64>,
    cost: Vec<f64>,
}

impl SpfTree {
    pub fn root(&self) -> NodeId {
        self.root
    }

    /// Alias of [`SpfTree::root`] for forward trees.
    pub fn source(&self) -> NodeId {
        self.root
    }

    pub fn node_count(&self) -> usize {
        self.parent.len()
    }

    pub fn is_reachable(&self, v: NodeId) -> bool {
        self.dist[v].is_finite()
    }

    pub fn parent_edge(&self, v: NodeId) -> Option<EdgeId> {
        self.parent[v]
    }

    pub fn parent_edges(&self) -> &[Option<EdgeId>] {
        &self.parent
    }

    /// Composite distance, `f64::INFINITY` when unreachable.
    pub fn dist(&self, v: NodeId) -> f64 {
        self.dist[v]
    }

    pub fn dist_composite(&self, v: NodeId) -> Option<f64> {
        self.is_reachable(v).then_some(self.dist[v])
    }

    /// Full `k`-dimensional cost of the tree path, `None` when unreachable.
    pub fn cost(&self, v: NodeId) -> Option<&[f64]> {
        self.is_reachable(v).then(|| &self.cost[v * self.k..(v + 1) * self.k])
    }

    pub fn dist_vector(&self, v: NodeId) -> Option<CostVector> {
        self.cost(v).map(|c| CostVector::new(c.to_vec()).expect("tree costs are non-negative"))
    }

    /// Edges of the tree path from the source to `v` (forward trees only).
    pub fn path_to(&self, graph: &MultiCostGraph, v: NodeId) -> Option<Vec<EdgeId>> {
        if !self.is_reachable(v) {
            return None;
        }
        let mut path = Vec::new();
        let mut cur = v;
        while let Some(e) = self.parent[cur] {
            path.push(e);
            cur = graph.edge(e).src;
        }
        path.reverse();
        Some(path)
    }
}

#[derive(PartialEq)]
struct Entry(f64, NodeId);

impl Eq for Entry {}

impl Ord for Entry {
    // reversed: BinaryHeap is a max-heap
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then_with(|| other.1.cmp(&self.1))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn dijkstra(graph: &MultiCostGraph, root: NodeId, weights: &EdgeWeights, reverse: bool) -> Result<SpfTree> {
    graph.check_node(root)?;
    let n = graph.node_count();
    let k = graph.k();
    let mut dist = vec![f64::INFINITY; n];
    let mut parent: Vec<Option<EdgeId>> = vec![None; n];
    let mut cost = vec![0.0; n * k];
    let mut settled = vec![false; n];
    let mut heap = BinaryHeap::new();
    dist[root] = 0.0;
    heap.push(Entry(0.0, root));

    while let Some(Entry(_, u)) = heap.pop() {
        if settled[u] {
            continue;
        }
        settled[u] = true;
        let edges = if reverse { graph.in_edges(u) } else { graph.out_edges(u) };
        for &e in edges {
            let edge = graph.edge(e);
            let v = if reverse { edge.src } else { edge.dst };
            if settled[v] {
                continue;
            }
            let nd = dist[u] + weights.get(e);
            let better = nd < dist[v] - EPS || (nd <= dist[v] + EPS && parent[v].is_none_or(|p| e < p));
            if better {
                dist[v] = nd;
                parent[v] = Some(e);
                for i in 0..k {
                    cost[v * k + i] = cost[u * k + i] + edge.costs[i];
                }
                heap.push(Entry(nd, v));
            }
        }
    }
    Ok(SpfTree { root, k, parent, dist, cost })
}

/// One-to-all shortest-path tree under the composite weight given by `mix`.
pub fn spf(graph: &MultiCostGraph, source: NodeId, mix: &MixVector) -> Result<SpfTree> {
    let w = EdgeWeights::from_mix(graph, mix)?;
    dijkstra(graph, source, &w, false)
}

/// One-to-all tree under precomputed edge weights.
pub fn spf_with_weights(graph: &MultiCostGraph, source: NodeId, weights: &EdgeWeights) -> Result<SpfTree> {
    dijkstra(graph, source, weights, false)
}

/// All-to-one tree: for every node, a shortest path *to* `dest`.
///
/// The parent edge of a node is its next hop toward `dest`, so the tree reads
/// directly as a destination-based routing table.
pub fn spf_to(graph: &MultiCostGraph, dest: NodeId, weights: &EdgeWeights) -> Result<SpfTree> {
    dijkstra(graph, dest, weights, true)
}

/// Cost vector of the composite-shortest `source -> dest` path, or `None` when
/// `dest` is unreachable.
pub fn shortest_cost_vector(
    graph: &MultiCostGraph,
    source: NodeId,
    dest: NodeId,
    mix: &MixVector,
) -> Result<Option<CostVector>> {
    graph.check_node(dest)?;
    Ok(spf(graph, source, mix)?.dist_vector(dest))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::composite_weight;

    fn three_path() -> MultiCostGraph {
        MultiCostGraph::from_arcs(2, 2, vec![(0, 1, vec![0.9, 0.9]), (0, 1, vec![0.1, 1.1]), (0, 1, vec![1.1, 0.1])])
            .unwrap()
    }

    #[test]
    fn three_path_flips_at_half() {
        let g = three_path();
        let t = spf(&g, 0, &MixVector::scalar(0.6).unwrap()).unwrap();
        assert_eq!(t.parent_edge(1), Some(1));
        assert!((t.dist(1) - 0.5).abs() < 1e-12);
        let t = spf(&g, 0, &MixVector::scalar(0.4).unwrap()).unwrap();
        assert_eq!(t.parent_edge(1), Some(2));
        assert_eq!(t.cost(1).unwrap(), &[1.1, 0.1]);
        assert!((t.dist(1) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn tie_at_half_takes_lowest_edge_id() {
        // composite values of the three edges at p = 0.5: 0.9, 0.6, 0.6
        let g = three_path();
        let mix = MixVector::scalar(0.5).unwrap();
        let values: Vec<f64> = g.edges().iter().map(|e| composite_weight(&e.costs, &mix).unwrap()).collect();
        let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
        let attaining: Vec<usize> = (0..3).filter(|&i| (values[i] - min).abs() < 1e-9).collect();
        assert_eq!(attaining, vec![1, 2]);
        assert!((min - 0.6).abs() < 1e-12);

        let c = shortest_cost_vector(&g, 0, 1, &mix).unwrap().unwrap();
        assert_eq!(c.as_slice(), &[0.1, 1.1]);
    }

    #[test]
    fn single_node_and_self_destination() {
        let g = MultiCostGraph::new(1, 2, vec![]).unwrap();
        let t = spf(&g, 0, &MixVector::scalar(0.3).unwrap()).unwrap();
        assert_eq!(t.dist_composite(0), Some(0.0));
        assert_eq!(t.parent_edge(0), None);

        let g = three_path();
        let c = shortest_cost_vector(&g, 0, 0, &MixVector::scalar(0.3).unwrap()).unwrap();
        assert_eq!(c.unwrap().as_slice(), &[0.0, 0.0]);
    }

    #[test]
    fn unreachable_and_out_of_range() {
        let g = three_path();
        let mix = MixVector::scalar(0.3).unwrap();
        assert_eq!(shortest_cost_vector(&g, 1, 0, &mix).unwrap(), None);
        assert!(matches!(spf(&g, 5, &mix), Err(QrlError::NodeOutOfRange { .. })));
    }

    #[test]
    fn reverse_tree_gives_next_hops() {
        // 0 -> 1 -> 2 and a costly shortcut 0 -> 2
        let g = MultiCostGraph::from_arcs(
            3,
            2,
            vec![(0, 1, vec![1.0, 0.0]), (1, 2, vec![0.0, 1.0]), (0, 2, vec![2.0, 2.0])],
        )
        .unwrap();
        let w = EdgeWeights::from_coefficients(&g, &[1.0, 1.0]).unwrap();
        let t = spf_to(&g, 2, &w).unwrap();
        assert_eq!(t.parent_edge(0), Some(0));
        assert_eq!(t.parent_edge(1), Some(1));
        assert_eq!(t.cost(0).unwrap(), &[1.0, 1.0]);
        assert_eq!(t.parent_edge(2), None);
    }

    #[test]
    fn path_reconstruction() {
        let g = MultiCostGraph::from_arcs(3, 1, vec![(0, 1, vec![1.0]), (1, 2, vec![1.0]), (0, 2, vec![5.0])]).unwrap();
        let t = spf(&g, 0, &MixVector::new(vec![1.0]).unwrap()).unwrap();
        assert_eq!(t.path_to(&g, 2).unwrap(), vec![0, 1]);
        assert_eq!(t.path_to(&g, 0).unwrap(), Vec::<usize>::new());
    }
}
