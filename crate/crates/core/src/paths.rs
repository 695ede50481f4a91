//! Exhaustive simple-path enumeration for small graphs.
//!
//! Exponential in general; used to certify witnesses and as an independent
//! check on the shortest-path machinery for graphs of a dozen nodes or so.

use crate::graph::{Constraints, EdgeId, MultiCostGraph, NodeId};

/// A simple path with its accumulated cost vector.
#[derive(Debug, Clone, PartialEq)]
pub struct CostedPath {
    pub edges: Vec<EdgeId>,
    pub cost: Vec<f64>,
}

/// Calls `visit` for every simple `src -> dst` path (parallel edges give
/// distinct paths). `visit` may return `false` to stop early. When
/// `src == dst` the empty path is the only one visited.
pub fn for_each_simple_path(
    graph: &MultiCostGraph,
    src: NodeId,
    dst: NodeId,
    mut prune: impl FnMut(&[f64]) -> bool,
    mut visit: impl FnMut(&[EdgeId], &[f64]) -> bool,
) {
    let k = graph.k();
    if src == dst {
        visit(&[], &vec![0.0; k]);
        return;
    }
    let mut on_path = vec![false; graph.node_count()];
    let mut edges = Vec::new();
    let mut cost = vec![0.0; k];
    on_path[src] = true;
    dfs(graph, src, dst, &mut on_path, &mut edges, &mut cost, &mut prune, &mut visit);
}

#[allow(clippy::too_many_arguments)]
fn dfs(
    graph: &MultiCostGraph,
    u: NodeId,
    dst: NodeId,
    on_path: &mut [bool],
    edges: &mut Vec<EdgeId>,
    cost: &mut Vec<f64>,
    prune: &mut impl FnMut(&[f64]) -> bool,
    visit: &mut impl FnMut(&[EdgeId], &[f64]) -> bool,
) -> bool {
    for &e in graph.out_edges(u) {
        let edge = graph.edge(e);
        let v = edge.dst;
        if on_path[v] {
            continue;
        }
        let saved = cost.clone();
        for (c, w) in cost.iter_mut().zip(edge.costs.iter()) {
            *c += w;
        }
        edges.push(e);
        let keep_going = if prune(cost) {
            true
        } else if v == dst {
            visit(edges, cost)
        } else {
            on_path[v] = true;
            let r = dfs(graph, v, dst, on_path, edges, cost, prune, visit);
            on_path[v] = false;
            r
        };
        edges.pop();
        *cost = saved;
        if !keep_going {
            return false;
        }
    }
    true
}

/// Every simple `src -> dst` path.
pub fn simple_paths(graph: &MultiCostGraph, src: NodeId, dst: NodeId) -> Vec<CostedPath> {
    let mut out = Vec::new();
    for_each_simple_path(
        graph,
        src,
        dst,
        |_| false,
        |e, c| {
            out.push(CostedPath { edges: e.to_vec(), cost: c.to_vec() });
            true
        },
    );
    out
}

/// A simple path meeting `constraints`, if one exists.
pub fn find_feasible_path(
    graph: &MultiCostGraph,
    src: NodeId,
    dst: NodeId,
    constraints: &Constraints,
) -> Option<CostedPath> {
    let mut found = None;
    // costs are non-negative, so a prefix that already fails cannot recover
    for_each_simple_path(
        graph,
        src,
        dst,
        |c| !constraints.is_satisfied_by(c),
        |e, c| {
            if constraints.is_satisfied_by(c) {
                found = Some(CostedPath { edges: e.to_vec(), cost: c.to_vec() });
                false
            } else {
                true
            }
        },
    );
    found
}

/// The simple path minimizing its largest cost coordinate (the tightest
/// `(a, a, ...)` box it fits in), with that coordinate value.
pub fn min_max_path(graph: &MultiCostGraph, src: NodeId, dst: NodeId) -> Option<(f64, CostedPath)> {
    let mut best: Option<(f64, CostedPath)> = None;
    let bound = std::cell::Cell::new(f64::INFINITY);
    for_each_simple_path(
        graph,
        src,
        dst,
        |c| c.iter().cloned().fold(0.0, f64::max) > bound.get(),
        |e, c| {
            let m = c.iter().cloned().fold(0.0, f64::max);
            if best.as_ref().is_none_or(|(b, _)| m < *b) {
                bound.set(m);
                best = Some((m, CostedPath { edges: e.to_vec(), cost: c.to_vec() }));
            }
            true
        },
    );
    best
}
