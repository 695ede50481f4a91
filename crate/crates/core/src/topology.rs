//! Deterministic generators for the studied graph families.
//!
//! Undirected families (grid, dual-home, mouth-like) emit every link as two
//! consecutive arcs `u -> v`, `v -> u` that share one cost vector; the shared
//! groups are recorded in [`Topology::links`] and consumed by cost assignment.
//! Costs of those families start at zero.

use serde::{Deserialize, Serialize};

use crate::classify::PairSet;
use crate::error::{QrlError, Result};
use crate::graph::{EdgeId, MultiCostGraph, NodeId};

/// Mouth-like leaf-pair wiring.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MouthVariant {
    /// First leaf to `a_i`, second leaf to `b_i`, leaves joined to each other.
    #[default]
    Mouth,
    /// Both leaves to both hubs, no leaf-leaf link.
    BothHubs,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum TopologySpec {
    Grid {
        rows: usize,
        cols: usize,
    },
    DualHome {
        total_nodes: usize,
        core_pairs: usize,
    },
    MouthLike {
        total_nodes: usize,
        core_pairs: usize,
        #[serde(default)]
        variant: MouthVariant,
    },
    ThreePath,
    TransmitScheme {
        n_paths: usize,
        k: usize,
    },
    Adversarial {
        k: usize,
        n: usize,
        #[serde(default)]
        duplicate_vertices: bool,
    },
}

impl TopologySpec {
    /// Short label used in result rows, e.g. `grid15x15`.
    pub fn label(&self) -> String {
        match self {
            TopologySpec::Grid { rows, cols } => format!("grid{rows}x{cols}"),
            TopologySpec::DualHome { total_nodes, .. } => format!("dual-home{total_nodes}"),
            TopologySpec::MouthLike { total_nodes, .. } => format!("mouth-like{total_nodes}"),
            TopologySpec::ThreePath => "three-path".into(),
            TopologySpec::TransmitScheme { n_paths, .. } => format!("transmit{n_paths}"),
            TopologySpec::Adversarial { k, n, .. } => format!("adversarial-k{k}-n{n}"),
        }
    }

    /// Generates the graph with `k` cost dimensions for the families whose
    /// costs are assigned later.
    pub fn build(&self, k: usize) -> Result<Topology> {
        match *self {
            TopologySpec::Grid { rows, cols } => gen_grid(rows, cols, k),
            TopologySpec::DualHome { total_nodes, core_pairs } => gen_dual_home(total_nodes, core_pairs, k),
            TopologySpec::MouthLike { total_nodes, core_pairs, variant } => {
                gen_mouth_like(total_nodes, core_pairs, variant, k)
            }
            TopologySpec::ThreePath => gen_three_path(),
            TopologySpec::TransmitScheme { n_paths, k } => gen_transmit_scheme(n_paths, k),
            TopologySpec::Adversarial { k, n, duplicate_vertices } => gen_adversarial(k, n, duplicate_vertices),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PairPolicy {
    /// Ordered pairs of distinct nodes.
    AllToAll,
    /// Ordered pairs of perimeter nodes, self-pairs included.
    BorderToBorder,
    /// Every ordered pair, self-pairs included.
    #[default]
    AllOrderedWithSelf,
}

impl PairPolicy {
    pub fn label(self) -> &'static str {
        match self {
            PairPolicy::AllToAll => "all-to-all",
            PairPolicy::BorderToBorder => "border-to-border",
            PairPolicy::AllOrderedWithSelf => "all-with-self",
        }
    }
}

/// A generated graph with its cost-sharing links and border nodes.
#[derive(Debug, Clone)]
pub struct Topology {
    pub graph: MultiCostGraph,
    /// Edge groups that share one sampled cost vector, in sampling order.
    pub links: Vec<Vec<EdgeId>>,
    /// Perimeter nodes, for families that have one.
    pub border: Option<Vec<NodeId>>,
}

impl Topology {
    pub fn pair_set(&self, policy: PairPolicy) -> Result<PairSet> {
        let n = self.graph.node_count();
        let pairs = match policy {
            PairPolicy::AllToAll => (0..n).flat_map(|u| (0..n).filter(move |&v| v != u).map(move |v| (u, v))).collect(),
            PairPolicy::AllOrderedWithSelf => (0..n).flat_map(|u| (0..n).map(move |v| (u, v))).collect(),
            PairPolicy::BorderToBorder => {
                let border = self.border.as_ref().ok_or_else(|| {
                    QrlError::InvalidTopology("border-to-border pairs need a family with a border".into())
                })?;
                border.iter().flat_map(|&u| border.iter().map(move |&v| (u, v))).collect()
            }
        };
        Ok(PairSet::new(pairs))
    }
}

/// Accumulates undirected links as arc pairs.
struct LinkBuilder {
    k: usize,
    arcs: Vec<(NodeId, NodeId, Vec<f64>)>,
    links: Vec<Vec<EdgeId>>,
}

impl LinkBuilder {
    fn new(k: usize) -> Self {
        LinkBuilder { k, arcs: Vec::new(), links: Vec::new() }
    }

    fn link(&mut self, u: NodeId, v: NodeId) {
        let id = self.arcs.len();
        self.arcs.push((u, v, vec![0.0; self.k]));
        self.arcs.push((v, u, vec![0.0; self.k]));
        self.links.push(vec![id, id + 1]);
    }

    fn finish(self, nodes: usize, border: Option<Vec<NodeId>>) -> Result<Topology> {
        Ok(Topology { graph: MultiCostGraph::from_arcs(nodes, self.k, self.arcs)?, links: self.links, border })
    }
}

fn check_k(k: usize) -> Result<()> {
    if k == 0 {
        return Err(QrlError::InvalidTopology("cost dimension k must be positive".into()));
    }
    Ok(())
}

/// `rows x cols` 4-neighbour lattice; node `(r, c)` has id `r * cols + c`.
pub fn gen_grid(rows: usize, cols: usize, k: usize) -> Result<Topology> {
    check_k(k)?;
    if rows < 2 || cols < 2 {
        return Err(QrlError::InvalidTopology(format!("grid {rows}x{cols} needs at least 2 rows and 2 columns")));
    }
    let id = |r: usize, c: usize| r * cols + c;
    let mut b = LinkBuilder::new(k);
    for r in 0..rows {
        for c in 0..cols {
            if c + 1 < cols {
                b.link(id(r, c), id(r, c + 1));
            }
            if r + 1 < rows {
                b.link(id(r, c), id(r + 1, c));
            }
        }
    }
    let border = (0..rows)
        .flat_map(|r| (0..cols).map(move |c| (r, c)))
        .filter(|&(r, c)| r == 0 || c == 0 || r == rows - 1 || c == cols - 1)
        .map(|(r, c)| id(r, c))
        .collect();
    b.finish(rows * cols, Some(border))
}

/// Splits `items` over `buckets` as evenly as possible, lowest buckets taking
/// the remainder.
fn split_even(items: usize, buckets: usize) -> Vec<usize> {
    (0..buckets).map(|i| items / buckets + usize::from(i < items % buckets)).collect()
}

/// Core of `core_pairs` hub pairs: `a_i = i`, `b_i = core_pairs + i`, each
/// pair joined, the `a`s a clique, the `b`s a clique.
fn core(b: &mut LinkBuilder, core_pairs: usize) {
    let a = |i: usize| i;
    let bb = |i: usize| core_pairs + i;
    for i in 0..core_pairs {
        b.link(a(i), bb(i));
    }
    for i in 0..core_pairs {
        for j in i + 1..core_pairs {
            b.link(a(i), a(j));
        }
    }
    for i in 0..core_pairs {
        for j in i + 1..core_pairs {
            b.link(bb(i), bb(j));
        }
    }
}

fn check_core(total_nodes: usize, core_pairs: usize, k: usize) -> Result<()> {
    check_k(k)?;
    if core_pairs == 0 || total_nodes < 2 * core_pairs {
        return Err(QrlError::InvalidTopology(format!("{total_nodes} nodes cannot hold {core_pairs} core pairs")));
    }
    Ok(())
}

/// Dual-home network: every leaf is linked to both hubs of its core pair.
pub fn gen_dual_home(total_nodes: usize, core_pairs: usize, k: usize) -> Result<Topology> {
    check_core(total_nodes, core_pairs, k)?;
    let mut b = LinkBuilder::new(k);
    core(&mut b, core_pairs);
    let mut next = 2 * core_pairs;
    for (i, count) in split_even(total_nodes - 2 * core_pairs, core_pairs).into_iter().enumerate() {
        for _ in 0..count {
            b.link(next, i);
            b.link(next, core_pairs + i);
            next += 1;
        }
    }
    b.finish(total_nodes, None)
}

/// Mouth-like network: leaves come in pairs attached to a core pair.
///
/// With an odd number of leaves the last one is linked to both hubs of core
/// pair 0.
pub fn gen_mouth_like(total_nodes: usize, core_pairs: usize, variant: MouthVariant, k: usize) -> Result<Topology> {
    check_core(total_nodes, core_pairs, k)?;
    let mut b = LinkBuilder::new(k);
    core(&mut b, core_pairs);
    let leaves = total_nodes - 2 * core_pairs;
    let mut next = 2 * core_pairs;
    for (i, count) in split_even(leaves / 2, core_pairs).into_iter().enumerate() {
        let (a, h) = (i, core_pairs + i);
        for _ in 0..count {
            let (x, y) = (next, next + 1);
            match variant {
                MouthVariant::Mouth => {
                    b.link(x, a);
                    b.link(y, h);
                    b.link(x, y);
                }
                MouthVariant::BothHubs => {
                    b.link(x, a);
                    b.link(x, h);
                    b.link(y, a);
                    b.link(y, h);
                }
            }
            next += 2;
        }
    }
    if leaves % 2 == 1 {
        b.link(next, 0);
        b.link(next, core_pairs);
    }
    b.finish(total_nodes, None)
}

/// Two nodes and three parallel `0 -> 1` edges: `(0.9, 0.9)`, `(0.1, 1.1)`,
/// `(1.1, 0.1)`. Only the first is feasible under unit constraints, and no
/// mix makes it composite-shortest.
pub fn gen_three_path() -> Result<Topology> {
    let graph =
        MultiCostGraph::from_arcs(2, 2, vec![(0, 1, vec![0.9, 0.9]), (0, 1, vec![0.1, 1.1]), (0, 1, vec![1.1, 0.1])])?;
    Ok(Topology { links: (0..3).map(|e| vec![e]).collect(), graph, border: None })
}

/// Two nodes joined by `n_paths` parallel `0 -> 1` edges with zero costs.
pub fn gen_transmit_scheme(n_paths: usize, k: usize) -> Result<Topology> {
    check_k(k)?;
    if n_paths == 0 {
        return Err(QrlError::InvalidTopology("transmit scheme needs at least one path".into()));
    }
    let graph = MultiCostGraph::from_arcs(2, k, (0..n_paths).map(|_| (0, 1, vec![0.0; k])).collect())?;
    Ok(Topology { links: (0..n_paths).map(|e| vec![e]).collect(), graph, border: None })
}

/// Group index `l` of leaf `v_i` (1-based `i`): `l * n < i <= (l + 1) * n`.
pub fn adversarial_group(n: usize, i: usize) -> usize {
    (i - 1) / n
}

/// Hub-and-spoke construction on which every table-based routing misses
/// satisfying paths for all but about `1/k` of the pairs under `< (k, k)`.
///
/// Node 0 is the hub `c`, nodes `1..=k*n` are the leaves `v_i`. Each leaf gets
/// `k` hub-to-leaf edges with costs `(j, k-1-j)`, `j = 0..k`, followed by one
/// leaf-to-hub edge with cost `(l, k-1-l)` where `l` is the leaf's group.
///
/// With `duplicate_vertices` every hub-to-leaf edge is routed through its own
/// relay node (cost `(j, k-1-j)` into the relay, `(0, 0)` out of it), so the
/// graph has no parallel edges. Relay of `(v_i, j)` is node
/// `k*n + 1 + (i-1)*k + j`.
pub fn gen_adversarial(k: usize, n: usize, duplicate_vertices: bool) -> Result<Topology> {
    if k < 2 || n < 1 {
        return Err(QrlError::InvalidTopology(format!(
            "adversarial construction needs k >= 2, n >= 1 (got k={k}, n={n})"
        )));
    }
    let leaves = k * n;
    let kf = k as f64;
    let cost = |j: usize| vec![j as f64, kf - 1.0 - j as f64];
    let mut arcs = Vec::new();
    for i in 1..=leaves {
        for j in 0..k {
            if duplicate_vertices {
                let relay = leaves + 1 + (i - 1) * k + j;
                arcs.push((0, relay, cost(j)));
                arcs.push((relay, i, vec![0.0, 0.0]));
            } else {
                arcs.push((0, i, cost(j)));
            }
        }
        arcs.push((i, 0, cost(adversarial_group(n, i))));
    }
    let nodes = if duplicate_vertices { leaves + 1 + leaves * k } else { leaves + 1 };
    let graph = MultiCostGraph::from_arcs(nodes, 2, arcs)?;
    Ok(Topology { links: (0..graph.edge_count()).map(|e| vec![e]).collect(), graph, border: None })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn degree(g: &MultiCostGraph, v: NodeId) -> usize {
        g.out_edges(v).len()
    }

    #[test]
    fn grid_pair_totals() {
        let t = gen_grid(15, 15, 2).unwrap();
        assert_eq!(t.pair_set(PairPolicy::AllOrderedWithSelf).unwrap().len(), 50625);
        assert_eq!(t.pair_set(PairPolicy::BorderToBorder).unwrap().len(), 3136);
        assert_eq!(t.pair_set(PairPolicy::AllToAll).unwrap().len(), 225 * 224);
        let t = gen_grid(45, 45, 2).unwrap();
        assert_eq!(t.pair_set(PairPolicy::AllOrderedWithSelf).unwrap().len(), 4_100_625);
        assert_eq!(t.pair_set(PairPolicy::BorderToBorder).unwrap().len(), 30976);
    }

    #[test]
    fn small_grid_shape() {
        let t = gen_grid(2, 2, 2).unwrap();
        assert_eq!(t.graph.node_count(), 4);
        assert_eq!(t.graph.edge_count(), 8);
        assert_eq!(t.links.len(), 4);
        assert!(t.graph.is_strongly_connected());
        assert!(gen_grid(1, 5, 2).is_err());
    }

    #[test]
    fn dual_home_counts() {
        let t = gen_dual_home(1000, 10, 2).unwrap();
        assert_eq!(t.graph.node_count(), 1000);
        assert_eq!(t.pair_set(PairPolicy::AllOrderedWithSelf).unwrap().len(), 1_000_000);
        // hub degree: 9 clique + 1 pair link + 98 leaves
        for i in 0..10 {
            assert_eq!(degree(&t.graph, i), 9 + 1 + 98);
            assert_eq!(degree(&t.graph, 10 + i), 9 + 1 + 98);
        }
        assert!(t.graph.is_strongly_connected());

        let t = gen_dual_home(20, 10, 2).unwrap();
        assert_eq!(t.graph.edge_count(), 2 * (10 + 45 + 45));
        assert!(gen_dual_home(19, 10, 2).is_err());
    }

    #[test]
    fn mouth_like_distribution() {
        let t = gen_mouth_like(1000, 10, MouthVariant::Mouth, 2).unwrap();
        // 49 leaf pairs per core pair, one link per leaf to its hub
        for i in 0..10 {
            assert_eq!(degree(&t.graph, i), 9 + 1 + 49);
        }
        assert!(t.graph.is_strongly_connected());

        let t = gen_mouth_like(24, 10, MouthVariant::Mouth, 2).unwrap();
        assert_eq!(degree(&t.graph, 0), 11);
        assert_eq!(degree(&t.graph, 1), 11);
        assert_eq!(degree(&t.graph, 2), 10);
        assert!(t.graph.is_strongly_connected());

        let t = gen_mouth_like(25, 10, MouthVariant::BothHubs, 2).unwrap();
        assert!(t.graph.is_strongly_connected());
        assert_eq!(degree(&t.graph, 24), 2);
    }

    #[test]
    fn three_path_and_transmit() {
        let t = gen_three_path().unwrap();
        assert_eq!(t.graph.edge_count(), 3);
        assert!(t.graph.edges().iter().all(|e| e.src == 0 && e.dst == 1));
        let t = gen_transmit_scheme(10, 2).unwrap();
        assert_eq!(t.graph.edge_count(), 10);
        assert_eq!(gen_transmit_scheme(1, 3).unwrap().graph.edge_count(), 1);
    }

    #[test]
    fn adversarial_small() {
        let t = gen_adversarial(2, 1, false).unwrap();
        let g = &t.graph;
        assert_eq!(g.node_count(), 3);
        assert_eq!(g.edge_count(), 6);
        let costs: Vec<&[f64]> = g.edges().iter().map(|e| e.costs.as_slice()).collect();
        assert_eq!(costs, vec![&[0.0, 1.0][..], &[1.0, 0.0], &[0.0, 1.0], &[0.0, 1.0], &[1.0, 0.0], &[1.0, 0.0]]);
    }

    #[test]
    fn adversarial_back_edges_by_group() {
        let t = gen_adversarial(3, 2, false).unwrap();
        let g = &t.graph;
        assert_eq!(g.node_count(), 7);
        assert_eq!(g.edge_count(), 3 * 2 * 4);
        let back: Vec<Vec<f64>> =
            (1..=6).map(|i| g.out_edges(i).iter().map(|&e| g.edge(e).costs.to_vec()).next().unwrap()).collect();
        assert_eq!(
            back,
            vec![vec![0.0, 2.0], vec![0.0, 2.0], vec![1.0, 1.0], vec![1.0, 1.0], vec![2.0, 0.0], vec![2.0, 0.0]]
        );
    }

    #[test]
    fn duplicated_adversarial_has_no_parallel_edges() {
        let t = gen_adversarial(3, 2, true).unwrap();
        let g = &t.graph;
        let mut seen = std::collections::HashSet::new();
        assert!(g.edges().iter().all(|e| seen.insert((e.src, e.dst))));
        assert_eq!(g.node_count(), 1 + 6 + 18);
        assert!(g.is_strongly_connected());
    }

    #[test]
    fn generators_are_deterministic() {
        let a = TopologySpec::MouthLike { total_nodes: 57, core_pairs: 4, variant: MouthVariant::Mouth };
        assert_eq!(a.build(2).unwrap().graph.to_json().unwrap(), a.build(2).unwrap().graph.to_json().unwrap());
    }

    #[test]
    fn spec_json_shape() {
        let s: TopologySpec = serde_json::from_str(r#"{"kind":"grid","rows":15,"cols":15}"#).unwrap();
        assert_eq!(s, TopologySpec::Grid { rows: 15, cols: 15 });
        assert_eq!(s.label(), "grid15x15");
    }
}
