//! Directed multigraphs whose edges carry `k`-dimensional additive costs.

use std::fmt;
use std::ops::{Deref, Index};

use serde::{Deserialize, Serialize};

use crate::error::{QrlError, Result};

pub type NodeId = usize;
pub type EdgeId = usize;

/// Absolute tolerance for tie detection and feasibility comparisons.
pub const EPS: f64 = 1e-9;

/// A point in non-negative `k`-space: an edge cost or an accumulated path cost.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct CostVector(Vec<f64>);

impl CostVector {
    pub fn new(components: Vec<f64>) -> Result<Self> {
        if let Some(c) = components.iter().find(|c| !c.is_finite() || **c < 0.0) {
            return Err(QrlError::InvalidGraph(format!("cost component {c} is not a finite non-negative number")));
        }
        Ok(CostVector(components))
    }

    pub fn zeros(k: usize) -> Self {
        CostVector(vec![0.0; k])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    /// Component-wise sum.
    pub fn add(&self, other: &CostVector) -> CostVector {
        CostVector(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    /// True when every component is strictly below the matching bound.
    pub fn strictly_below(&self, bounds: &[f64]) -> bool {
        self.0.iter().zip(bounds).all(|(c, b)| c < b)
    }
}

impl Deref for CostVector {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl TryFrom<Vec<f64>> for CostVector {
    type Error = QrlError;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        CostVector::new(v)
    }
}

impl From<CostVector> for Vec<f64> {
    fn from(c: CostVector) -> Vec<f64> {
        c.0
    }
}

/// Mixing parameter: a point of the unit `(k-1)`-simplex.
///
/// For two metrics the scalar `p` stands for the mix `(p, 1 - p)`, i.e. the
/// composite weight `p * w1 + (1 - p) * w2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixVector(Vec<f64>);

impl MixVector {
    pub fn new(p: Vec<f64>) -> Result<Self> {
        if p.is_empty() {
            return Err(QrlError::InvalidMix("empty mix".into()));
        }
        if p.iter().any(|x| !x.is_finite() || *x < 0.0) {
            return Err(QrlError::InvalidMix(format!("negative or non-finite entry in {p:?}")));
        }
        let sum: f64 = p.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(QrlError::InvalidMix(format!("entries sum to {sum}, not 1")));
        }
        Ok(MixVector(p))
    }

    /// Two-metric mix `(p, 1 - p)`.
    pub fn scalar(p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(QrlError::InvalidMix(format!("p = {p} outside [0, 1]")));
        }
        Ok(MixVector(vec![p, 1.0 - p]))
    }

    /// Rescales arbitrary non-negative weights onto the simplex.
    pub fn from_weights(weights: &[f64]) -> Result<Self> {
        let sum: f64 = weights.iter().sum();
        if !(sum > 0.0) || weights.iter().any(|w| *w < 0.0 || !w.is_finite()) {
            return Err(QrlError::InvalidMix(format!("cannot normalize {weights:?}")));
        }
        Ok(MixVector(weights.iter().map(|w| w / sum).collect()))
    }

    /// The `i`-th unit vector: the single-metric weighting `w = W_i`.
    pub fn unit(k: usize, i: usize) -> Result<Self> {
        if i >= k {
            return Err(QrlError::InvalidMix(format!("axis {i} out of range for k = {k}")));
        }
        let mut p = vec![0.0; k];
        p[i] = 1.0;
        Ok(MixVector(p))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    /// First coordinate; the scalar `p` of a two-metric mix.
    pub fn p(&self) -> f64 {
        self.0[0]
    }
}

impl fmt::Display for MixVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|x| format!("{x}")).collect();
        write!(f, "{}", parts.join(";"))
    }
}

/// `sum_i p_i * w_i`.
pub fn composite_weight(costs: &[f64], mix: &MixVector) -> Result<f64> {
    if costs.len() != mix.dim() {
        return Err(QrlError::DimensionMismatch { expected: mix.dim(), got: costs.len() });
    }
    Ok(dot(costs, mix.as_slice()))
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Strictness {
    /// Feasible iff `sum W_i < C_i` for every `i`.
    #[default]
    Strict,
    /// Feasible iff `sum W_i <= C_i` for every `i`.
    NonStrict,
}

/// Per-dimension upper bounds on path cost.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constraints {
    bounds: Vec<f64>,
    #[serde(default)]
    strictness: Strictness,
}

impl Constraints {
    pub fn new(bounds: Vec<f64>, strictness: Strictness) -> Result<Self> {
        if bounds.is_empty() {
            return Err(QrlError::InvalidConstraint("no bounds given".into()));
        }
        if let Some(b) = bounds.iter().find(|b| !(**b > 0.0) || !b.is_finite()) {
            return Err(QrlError::InvalidConstraint(format!("bound {b} is not positive")));
        }
        Ok(Constraints { bounds, strictness })
    }

    pub fn strict(bounds: Vec<f64>) -> Result<Self> {
        Self::new(bounds, Strictness::Strict)
    }

    /// All-ones strict bounds: the constraints of an already normalized graph.
    pub fn unit(k: usize) -> Self {
        Constraints { bounds: vec![1.0; k], strictness: Strictness::Strict }
    }

    pub fn bounds(&self) -> &[f64] {
        &self.bounds
    }

    pub fn strictness(&self) -> Strictness {
        self.strictness
    }

    pub fn dim(&self) -> usize {
        self.bounds.len()
    }

    pub fn is_satisfied_by(&self, cost: &[f64]) -> bool {
        match self.strictness {
            Strictness::Strict => cost.iter().zip(&self.bounds).all(|(c, b)| c < b),
            Strictness::NonStrict => cost.iter().zip(&self.bounds).all(|(c, b)| c <= b),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub id: EdgeId,
    pub src: NodeId,
    pub dst: NodeId,
    pub costs: CostVector,
}

#[derive(Deserialize, Serialize)]
struct GraphJson {
    k: usize,
    nodes: usize,
    edges: Vec<Edge>,
}

/// Directed multigraph with `k` non-negative costs per edge.
///
/// Nodes are dense ids `0..node_count`; edge ids are contiguous from 0 and
/// index directly into the edge list. Outgoing adjacency lists are kept in
/// ascending edge-id order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GraphJson", into = "GraphJson")]
pub struct MultiCostGraph {
    k: usize,
    node_count: usize,
    edges: Vec<Edge>,
    out: Vec<Vec<EdgeId>>,
    incoming: Vec<Vec<EdgeId>>,
}

impl MultiCostGraph {
    pub fn new(node_count: usize, k: usize, edges: Vec<Edge>) -> Result<Self> {
        if node_count == 0 {
            return Err(QrlError::InvalidGraph("graph needs at least one node".into()));
        }
        if k == 0 {
            return Err(QrlError::InvalidGraph("cost dimension k must be positive".into()));
        }
        let mut out = vec![Vec::new(); node_count];
        let mut incoming = vec![Vec::new(); node_count];
        for (pos, e) in edges.iter().enumerate() {
            if e.id != pos {
                return Err(QrlError::InvalidGraph(format!(
                    "edge ids must be unique and contiguous from 0: found id {} at position {pos}",
                    e.id
                )));
            }
            if e.src >= node_count || e.dst >= node_count {
                return Err(QrlError::InvalidGraph(format!(
                    "edge {} joins {} -> {} outside 0..{node_count}",
                    e.id, e.src, e.dst
                )));
            }
            if e.costs.dim() != k {
                return Err(QrlError::InvalidGraph(format!(
                    "edge {} has {} cost components, expected {k}",
                    e.id,
                    e.costs.dim()
                )));
            }
            out[e.src].push(e.id);
            incoming[e.dst].push(e.id);
        }
        Ok(MultiCostGraph { k, node_count, edges, out, incoming })
    }

    /// Builds a graph from `(src, dst, costs)` triples, numbering edges in order.
    pub fn from_arcs(node_count: usize, k: usize, arcs: Vec<(NodeId, NodeId, Vec<f64>)>) -> Result<Self> {
        let edges = arcs
            .into_iter()
            .enumerate()
            .map(|(id, (src, dst, c))| Ok(Edge { id, src, dst, costs: CostVector::new(c)? }))
            .collect::<Result<Vec<_>>>()?;
        Self::new(node_count, k, edges)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, id: EdgeId) -> &Edge {
        &self.edges[id]
    }

    pub fn out_edges(&self, node: NodeId) -> &[EdgeId] {
        &self.out[node]
    }

    pub fn in_edges(&self, node: NodeId) -> &[EdgeId] {
        &self.incoming[node]
    }

    pub fn check_node(&self, node: NodeId) -> Result<()> {
        if node >= self.node_count {
            return Err(QrlError::NodeOutOfRange { node, nodes: self.node_count });
        }
        Ok(())
    }

    /// Returns a copy with every edge cost replaced by `f(edge)`.
    pub fn map_costs(&self, mut f: impl FnMut(&Edge) -> CostVector) -> Result<Self> {
        let edges = self.edges.iter().map(|e| Edge { costs: f(e), ..e.clone() }).collect();
        Self::new(self.node_count, self.k, edges)
    }

    /// Nodes reachable from `source` by a breadth-first walk.
    pub fn reachable_from(&self, source: NodeId) -> Vec<bool> {
        let mut seen = vec![false; self.node_count];
        let mut queue = std::collections::VecDeque::from([source]);
        seen[source] = true;
        while let Some(u) = queue.pop_front() {
            for &e in &self.out[u] {
                let v = self.edges[e].dst;
                if !seen[v] {
                    seen[v] = true;
                    queue.push_back(v);
                }
            }
        }
        seen
    }

    /// True when every node reaches every other node.
    pub fn is_strongly_connected(&self) -> bool {
        (0..self.node_count).all(|s| self.reachable_from(s).iter().all(|r| *r))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

impl Index<EdgeId> for MultiCostGraph {
    type Output = Edge;
    fn index(&self, id: EdgeId) -> &Edge {
        &self.edges[id]
    }
}

impl TryFrom<GraphJson> for MultiCostGraph {
    type Error = QrlError;
    fn try_from(g: GraphJson) -> Result<Self> {
        MultiCostGraph::new(g.nodes, g.k, g.edges)
    }
}

impl From<MultiCostGraph> for GraphJson {
    fn from(g: MultiCostGraph) -> GraphJson {
        GraphJson { k: g.k, nodes: g.node_count, edges: g.edges }
    }
}

/// Divides every cost by its constraint, so feasibility becomes `sum w_i < 1`.
pub fn normalize(graph: &MultiCostGraph, constraints: &Constraints) -> Result<MultiCostGraph> {
    if constraints.dim() != graph.k() {
        return Err(QrlError::DimensionMismatch { expected: graph.k(), got: constraints.dim() });
    }
    if let Some(b) = constraints.bounds().iter().find(|b| !(**b > 0.0)) {
        return Err(QrlError::InvalidConstraint(format!("bound {b} is not positive")));
    }
    let bounds = constraints.bounds();
    graph.map_costs(|e| CostVector(e.costs.iter().zip(bounds).map(|(w, c)| w / c).collect()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn three_path() -> MultiCostGraph {
        MultiCostGraph::from_arcs(2, 2, vec![(0, 1, vec![0.9, 0.9]), (0, 1, vec![0.1, 1.1]), (0, 1, vec![1.1, 0.1])])
            .unwrap()
    }

    #[test]
    fn normalize_divides_by_bounds() {
        let g = MultiCostGraph::from_arcs(2, 2, vec![(0, 1, vec![15.0, 0.03])]).unwrap();
        let c = Constraints::strict(vec![30.0, 0.05]).unwrap();
        let n = normalize(&g, &c).unwrap();
        let w = n.edge(0).costs.as_slice();
        assert!((w[0] - 0.5).abs() < 1e-12);
        assert!((w[1] - 0.6).abs() < 1e-12);
        assert_eq!(g.edge(0).costs.as_slice(), &[15.0, 0.03]);
    }

    #[test]
    fn unit_constraints_leave_graph_unchanged() {
        let g = three_path();
        let n = normalize(&g, &Constraints::unit(2)).unwrap();
        assert_eq!(n, g);
        assert!(n.edge(0).costs.strictly_below(&[1.0, 1.0]));
    }

    #[test]
    fn non_positive_bounds_are_rejected() {
        assert!(matches!(Constraints::strict(vec![1.0, 0.0]), Err(QrlError::InvalidConstraint(_))));
        assert!(Constraints::strict(vec![-2.0]).is_err());
    }

    #[test]
    fn composite_weight_examples() {
        let m = MixVector::scalar(0.5).unwrap();
        assert!((composite_weight(&[0.2, 0.4], &m).unwrap() - 0.3).abs() < 1e-12);
        let m = MixVector::scalar(1.0).unwrap();
        assert_eq!(composite_weight(&[0.7, 3.0], &m).unwrap(), 0.7);
        let m = MixVector::scalar(0.6).unwrap();
        assert!((composite_weight(&[0.1, 1.1], &m).unwrap() - 0.5).abs() < 1e-12);
        assert!(matches!(composite_weight(&[0.1, 0.2, 0.3], &m), Err(QrlError::DimensionMismatch { .. })));
    }

    #[test]
    fn mix_vector_validation() {
        assert!(MixVector::new(vec![0.3, 0.3, 0.4]).is_ok());
        assert!(MixVector::new(vec![0.5, 0.6]).is_err());
        assert!(MixVector::new(vec![-0.1, 1.1]).is_err());
        assert!(MixVector::scalar(1.5).is_err());
        let m = MixVector::from_weights(&[2.0, 6.0]).unwrap();
        assert_eq!(m.as_slice(), &[0.25, 0.75]);
    }

    #[test]
    fn graph_validation() {
        assert!(MultiCostGraph::from_arcs(2, 2, vec![(0, 2, vec![1.0, 1.0])]).is_err());
        assert!(MultiCostGraph::from_arcs(2, 2, vec![(0, 1, vec![1.0])]).is_err());
        assert!(MultiCostGraph::from_arcs(2, 1, vec![(0, 1, vec![-1.0])]).is_err());
        let bad_ids = r#"{"k":1,"nodes":2,"edges":[{"id":1,"src":0,"dst":1,"costs":[1.0]}]}"#;
        assert!(MultiCostGraph::from_json(bad_ids).is_err());
    }

    #[test]
    fn json_round_trip() {
        let g = three_path();
        let s = g.to_json().unwrap();
        assert!(s.starts_with(r#"{"k":2,"nodes":2,"edges":[{"id":0,"src":0,"dst":1,"costs":[0.9,0.9]}"#));
        assert_eq!(MultiCostGraph::from_json(&s).unwrap(), g);
    }
}
