//! Table-driven (distributed) routing.
//!
//! Every node forwards by a `(destination -> outgoing edge)` table and nothing
//! else. This module evaluates such tables, builds them on the hub-and-spoke
//! construction that defeats every table-based scheme, and implements the
//! deterministic sum-metric routing and the randomized next-hop rule that give
//! the matching positive guarantees.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::Serialize;

use crate::classify::PairSet;
use crate::error::{QrlError, Result};
use crate::graph::{Constraints, CostVector, EdgeId, MultiCostGraph, NodeId, EPS};
use crate::paths::{find_feasible_path, min_max_path};
use crate::spf::{spf_to, EdgeWeights};
use crate::topology::{adversarial_group, gen_adversarial};

/// Next-edge tables for every node, indexed `[node][destination]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoutingTables {
    next: Vec<Vec<Option<EdgeId>>>,
}

impl RoutingTables {
    pub fn empty(node_count: usize) -> Self {
        RoutingTables { next: vec![vec![None; node_count]; node_count] }
    }

    pub fn node_count(&self) -> usize {
        self.next.len()
    }

    pub fn next_edge(&self, node: NodeId, dest: NodeId) -> Option<EdgeId> {
        self.next[node][dest]
    }

    /// Sets `node`'s entry for `dest`; the edge must leave `node`.
    pub fn set(&mut self, graph: &MultiCostGraph, node: NodeId, dest: NodeId, edge: EdgeId) -> Result<()> {
        graph.check_node(node)?;
        graph.check_node(dest)?;
        if node == dest {
            return Err(QrlError::InvalidTable(format!("node {node} cannot hold an entry for itself")));
        }
        if edge >= graph.edge_count() || graph.edge(edge).src != node {
            return Err(QrlError::InvalidTable(format!("edge {edge} does not leave node {node}")));
        }
        self.next[node][dest] = Some(edge);
        Ok(())
    }

    pub fn validate(&self, graph: &MultiCostGraph) -> Result<()> {
        if self.next.len() != graph.node_count() {
            return Err(QrlError::InvalidTable(format!(
                "tables for {} nodes, graph has {}",
                self.next.len(),
                graph.node_count()
            )));
        }
        for (node, row) in self.next.iter().enumerate() {
            for (dest, entry) in row.iter().enumerate() {
                if let Some(e) = entry {
                    if dest == node || *e >= graph.edge_count() || graph.edge(*e).src != node {
                        return Err(QrlError::InvalidTable(format!("bad entry {node} -> {dest}: edge {e}")));
                    }
                }
            }
        }
        Ok(())
    }

    /// Tables read off all-to-one shortest-path trees under `weights`.
    pub fn from_destination_trees(graph: &MultiCostGraph, weights: &EdgeWeights) -> Result<Self> {
        let mut t = RoutingTables::empty(graph.node_count());
        for dest in 0..graph.node_count() {
            let tree = spf_to(graph, dest, weights)?;
            for node in 0..graph.node_count() {
                t.next[node][dest] = tree.parent_edge(node);
            }
        }
        Ok(t)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ForwardResult {
    Delivered { cost: CostVector, hops: Vec<EdgeId> },
    Loop,
    DeadEnd,
}

impl ForwardResult {
    pub fn cost(&self) -> Option<&CostVector> {
        match self {
            ForwardResult::Delivered { cost, .. } => Some(cost),
            _ => None,
        }
    }
}

/// Follows the tables from `u` toward `v`.
pub fn forward(graph: &MultiCostGraph, tables: &RoutingTables, u: NodeId, v: NodeId) -> ForwardResult {
    let mut visited = vec![false; graph.node_count()];
    let mut cost = CostVector::zeros(graph.k());
    let mut hops = Vec::new();
    let mut at = u;
    visited[at] = true;
    while at != v {
        let Some(e) = tables.next_edge(at, v) else {
            return ForwardResult::DeadEnd;
        };
        let edge = graph.edge(e);
        cost = cost.add(&edge.costs);
        hops.push(e);
        at = edge.dst;
        if visited[at] {
            return ForwardResult::Loop;
        }
        visited[at] = true;
    }
    ForwardResult::Delivered { cost, hops }
}

/// Number of pairs whose forwarded path meets its constraint. Self-pairs are
/// delivered over the empty path and count when the zero vector qualifies.
pub fn count_satisfied(
    graph: &MultiCostGraph,
    tables: &RoutingTables,
    pairs: &PairSet,
    constraint: impl Fn(usize) -> Constraints,
) -> usize {
    pairs
        .pairs()
        .iter()
        .enumerate()
        .filter(|&(i, &(u, v))| forward(graph, tables, u, v).cost().is_some_and(|c| constraint(i).is_satisfied_by(c)))
        .count()
}

/// `(kn + 1)^2 - kn((k - 1)n - 1)`: no table set on the hub-and-spoke
/// construction satisfies more ordered pairs (self-pairs included).
pub fn adversarial_bound(k: usize, n: usize) -> usize {
    let kn = k * n;
    (kn + 1) * (kn + 1) - kn * ((k - 1) * n - 1)
}

/// The strict `< (k, k)` constraint of the construction.
pub fn adversarial_constraints(k: usize) -> Constraints {
    Constraints::strict(vec![k as f64, k as f64]).expect("k >= 2")
}

/// Tables on the (non-duplicated) construction where the hub sends traffic
/// for leaf `v_j` over its `choice[j - 1]`-th parallel edge. Leaves have a
/// single outgoing edge, which serves every destination.
pub fn hub_tables(graph: &MultiCostGraph, k: usize, n: usize, choice: &[usize]) -> Result<RoutingTables> {
    let leaves = k * n;
    if graph.node_count() != leaves + 1 || choice.len() != leaves || choice.iter().any(|&c| c >= k) {
        return Err(QrlError::InvalidArgument(format!("hub choices {choice:?} do not fit k={k}, n={n}")));
    }
    let mut t = RoutingTables::empty(leaves + 1);
    for j in 1..=leaves {
        let e = (j - 1) * (k + 1) + choice[j - 1];
        t.set(graph, 0, j, e)?;
        let back = (j - 1) * (k + 1) + k;
        for dest in (0..=leaves).filter(|&d| d != j) {
            t.set(graph, j, dest, back)?;
        }
    }
    Ok(t)
}

/// A hub choice that meets the bound: traffic for a leaf in group `g` uses the
/// parallel edge that completes the back edges of group `g + 1 (mod k)`.
pub fn structured_choice(k: usize, n: usize) -> Vec<usize> {
    (1..=k * n)
        .map(|j| {
            let target = (adversarial_group(n, j) + 1) % k;
            k - 1 - target
        })
        .collect()
}

/// Outcome of checking table sets against the bound.
#[derive(Debug, Clone, Serialize)]
pub struct BoundCheck {
    pub bound: usize,
    pub best: usize,
    pub best_choice: Vec<usize>,
    pub tables_checked: u64,
    pub exceeded: u64,
    pub exhaustive: bool,
}

fn satisfied_on_construction(graph: &MultiCostGraph, k: usize, n: usize, choice: &[usize]) -> Result<usize> {
    let tables = hub_tables(graph, k, n, choice)?;
    let pairs = all_pairs_with_self(graph.node_count());
    let c = adversarial_constraints(k);
    Ok(count_satisfied(graph, &tables, &pairs, |_| c.clone()))
}

fn all_pairs_with_self(n: usize) -> PairSet {
    PairSet::new((0..n).flat_map(|u| (0..n).map(move |v| (u, v))).collect())
}

/// Enumerates all `k^(kn)` hub tables (leaf tables are forced).
pub fn bound_check_exhaustive(k: usize, n: usize) -> Result<BoundCheck> {
    let leaves = k * n;
    let total = (k as u64)
        .checked_pow(leaves as u32)
        .filter(|t| *t <= 1 << 22)
        .ok_or_else(|| QrlError::InvalidArgument(format!("{k}^{leaves} hub tables are too many to enumerate")))?;
    let graph = gen_adversarial(k, n, false)?.graph;
    let bound = adversarial_bound(k, n);
    let mut check =
        BoundCheck { bound, best: 0, best_choice: vec![], tables_checked: 0, exceeded: 0, exhaustive: true };
    let mut choice = vec![0usize; leaves];
    for code in 0..total {
        let mut c = code;
        for slot in choice.iter_mut() {
            *slot = (c % k as u64) as usize;
            c /= k as u64;
        }
        let s = satisfied_on_construction(&graph, k, n, &choice)?;
        record(&mut check, s, &choice);
    }
    Ok(check)
}

fn record(check: &mut BoundCheck, satisfied: usize, choice: &[usize]) {
    check.tables_checked += 1;
    if satisfied > check.bound {
        check.exceeded += 1;
    }
    if satisfied > check.best {
        check.best = satisfied;
        check.best_choice = choice.to_vec();
    }
}

/// Checks the structured table plus `samples` uniformly random hub tables.
pub fn bound_check_sampled(k: usize, n: usize, samples: usize, seed: u64) -> Result<BoundCheck> {
    let graph = gen_adversarial(k, n, false)?.graph;
    let mut check = BoundCheck {
        bound: adversarial_bound(k, n),
        best: 0,
        best_choice: vec![],
        tables_checked: 0,
        exceeded: 0,
        exhaustive: false,
    };
    let structured = structured_choice(k, n);
    let s = satisfied_on_construction(&graph, k, n, &structured)?;
    record(&mut check, s, &structured);
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    for _ in 0..samples {
        let choice: Vec<usize> = (0..k * n).map(|_| rng.random_range(0..k)).collect();
        let s = satisfied_on_construction(&graph, k, n, &choice)?;
        record(&mut check, s, &choice);
    }
    Ok(check)
}

/// Pair with a certified witness path of cost at most `(slack, slack)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeasiblePair {
    pub src: NodeId,
    pub dst: NodeId,
    pub slack: f64,
    pub witness: Vec<EdgeId>,
}

#[derive(Debug, Clone, Default)]
pub struct FeasiblePairSet {
    pairs: Vec<FeasiblePair>,
}

impl FeasiblePairSet {
    /// Checks that each witness is a `src -> dst` walk within its slack.
    pub fn certify(graph: &MultiCostGraph, pairs: Vec<FeasiblePair>) -> Result<Self> {
        for p in &pairs {
            if !(p.slack >= 0.0) || p.src == p.dst {
                return Err(QrlError::InvalidArgument(format!("bad feasible pair {} -> {}", p.src, p.dst)));
            }
            let mut at = p.src;
            let mut cost = CostVector::zeros(graph.k());
            for &e in &p.witness {
                if e >= graph.edge_count() || graph.edge(e).src != at {
                    return Err(QrlError::InvalidArgument(format!("witness for {} -> {} is not a walk", p.src, p.dst)));
                }
                cost = cost.add(&graph.edge(e).costs);
                at = graph.edge(e).dst;
            }
            if at != p.dst || cost.iter().any(|c| *c > p.slack + EPS) {
                return Err(QrlError::InvalidArgument(format!(
                    "witness for {} -> {} does not fit slack {}",
                    p.src, p.dst, p.slack
                )));
            }
        }
        Ok(FeasiblePairSet { pairs })
    }

    /// Every reachable pair of distinct nodes, with the tightest slack any
    /// simple path achieves (found by exhaustive enumeration).
    pub fn brute_force(graph: &MultiCostGraph, pairs: &PairSet) -> Result<Self> {
        let mut out = Vec::new();
        for &(u, v) in pairs.pairs() {
            if u == v {
                continue;
            }
            if let Some((slack, path)) = min_max_path(graph, u, v) {
                out.push(FeasiblePair { src: u, dst: v, slack, witness: path.edges });
            }
        }
        Self::certify(graph, out)
    }

    /// Pairs of distinct nodes joined by some path of cost at most `(a, a)`.
    pub fn with_uniform_slack(graph: &MultiCostGraph, pairs: &PairSet, a: f64) -> Result<Self> {
        let box_ = Constraints::new(vec![a; graph.k()], crate::graph::Strictness::NonStrict)?;
        let mut out = Vec::new();
        for &(u, v) in pairs.pairs() {
            if u == v {
                continue;
            }
            if let Some(path) = find_feasible_path(graph, u, v, &box_) {
                out.push(FeasiblePair { src: u, dst: v, slack: a, witness: path.edges });
            }
        }
        Self::certify(graph, out)
    }

    pub fn pairs(&self) -> &[FeasiblePair] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SumRouteReport {
    pub checked: usize,
    /// Pairs delivered with both coordinates at most twice their slack.
    pub delivered: usize,
}

fn require_two_metrics(graph: &MultiCostGraph) -> Result<()> {
    if graph.k() != 2 {
        return Err(QrlError::DimensionMismatch { expected: 2, got: graph.k() });
    }
    Ok(())
}

/// Routes by shortest paths of the sum metric `w1 + w2`.
///
/// A witness of cost at most `(a, a)` has sum at most `2a`, so the routed
/// path's sum, and hence each of its coordinates, is at most `2a` too.
///
/// # Panics
///
/// If a certified pair is delivered above `(2a, 2a)`; the argument above rules
/// that out, so a panic flags a bug.
pub fn sum_metric_route(graph: &MultiCostGraph, pairs: &FeasiblePairSet) -> Result<(RoutingTables, SumRouteReport)> {
    require_two_metrics(graph)?;
    let weights = EdgeWeights::from_coefficients(graph, &[1.0, 1.0])?;
    let tables = RoutingTables::from_destination_trees(graph, &weights)?;
    let mut delivered = 0;
    for p in pairs.pairs() {
        match forward(graph, &tables, p.src, p.dst) {
            ForwardResult::Delivered { cost, .. } if cost.iter().all(|c| *c <= 2.0 * p.slack + EPS) => delivered += 1,
            other => panic!("pair {} -> {} (slack {}) routed to {other:?}", p.src, p.dst, p.slack),
        }
    }
    Ok((tables, SumRouteReport { checked: pairs.len(), delivered }))
}

/// Kinds of composite-shortest path, by which coordinates are positive.
const ZERO_FIRST: u8 = 1; // (0, +)
const ZERO_SECOND: u8 = 2; // (+, 0)
const MIXED: u8 = 4; // (+, +)
const EMPTY: u8 = 8; // (0, 0)

fn extend(edge_cost: &[f64], kinds: u8) -> u8 {
    let mut out = 0;
    for (bit, pos) in
        [(ZERO_FIRST, (false, true)), (ZERO_SECOND, (true, false)), (MIXED, (true, true)), (EMPTY, (false, false))]
    {
        if kinds & bit != 0 {
            let first = edge_cost[0] > 0.0 || pos.0;
            let second = edge_cost[1] > 0.0 || pos.1;
            out |= match (first, second) {
                (false, true) => ZERO_FIRST,
                (true, false) => ZERO_SECOND,
                (true, true) => MIXED,
                (false, false) => EMPTY,
            };
        }
    }
    out
}

/// Next-hop rule at one node for one destination.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HopRule {
    Fixed(EdgeId),
    /// Fair coin between a continuation with zero first cost and one with
    /// zero second cost.
    Coin {
        zero_first: EdgeId,
        zero_second: EdgeId,
    },
}

/// The randomized next-hop rule toward `dest` for every node that reaches it.
///
/// Among the continuations on sum-metric shortest paths, a node prefers one
/// admitting a path positive in both coordinates. When every shortest path is
/// zero in some coordinate and both kinds occur, it flips a coin between them.
/// Along a sum-metric shortest path the sum is fixed, so a path is
/// characterized by which coordinates are positive; those kinds are propagated
/// instead of enumerating paths.
pub fn randomized_hop_rules(graph: &MultiCostGraph, dest: NodeId) -> Result<Vec<Option<HopRule>>> {
    require_two_metrics(graph)?;
    let weights = EdgeWeights::from_coefficients(graph, &[1.0, 1.0])?;
    let tree = spf_to(graph, dest, &weights)?;
    let n = graph.node_count();
    let tight: Vec<Vec<EdgeId>> = (0..n)
        .map(|x| {
            if x == dest || !tree.is_reachable(x) {
                return Vec::new();
            }
            graph
                .out_edges(x)
                .iter()
                .copied()
                .filter(|&e| {
                    let y = graph.edge(e).dst;
                    tree.is_reachable(y) && weights.get(e) + tree.dist(y) <= tree.dist(x) + EPS
                })
                .collect()
        })
        .collect();

    let mut kinds = vec![0u8; n];
    kinds[dest] = EMPTY;
    let mut order: Vec<NodeId> = (0..n).filter(|&x| tree.is_reachable(x)).collect();
    order.sort_by(|a, b| tree.dist(*a).total_cmp(&tree.dist(*b)).then(a.cmp(b)));
    // zero-weight ties can make the tight subgraph cyclic; iterate to a fixed point
    loop {
        let mut changed = false;
        for &x in &order {
            if x == dest {
                continue;
            }
            let k = tight[x].iter().fold(0, |acc, &e| acc | extend(&graph.edge(e).costs, kinds[graph.edge(e).dst]));
            if k != kinds[x] {
                kinds[x] |= k;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }

    Ok((0..n)
        .map(|x| {
            if tight[x].is_empty() {
                return None;
            }
            let via = |e: EdgeId| extend(&graph.edge(e).costs, kinds[graph.edge(e).dst]);
            let first_with = |bit: u8| tight[x].iter().copied().find(|&e| via(e) & bit != 0);
            if let Some(e) = first_with(MIXED) {
                return Some(HopRule::Fixed(e));
            }
            match (first_with(ZERO_FIRST), first_with(ZERO_SECOND)) {
                (Some(zero_first), Some(zero_second)) => Some(HopRule::Coin { zero_first, zero_second }),
                _ => Some(HopRule::Fixed(tight[x][0])),
            }
        })
        .collect())
}

#[derive(Debug, Clone, Serialize)]
pub struct RandomizedRouteReport {
    pub pairs: usize,
    pub trials: usize,
    /// Mean over trials of the fraction of pairs delivered strictly within `(2a, 2a)`.
    pub mean_fraction: f64,
    /// Standard error of `mean_fraction` from the per-trial spread.
    pub stderr: f64,
    /// Binomial standard error `sqrt(1/4 / (trials * pairs))` at the guaranteed rate 1/2.
    pub binomial_stderr: f64,
}

/// Draws one table set from the randomized rules; coins come from `rng` in
/// destination-major, node-minor order.
pub fn draw_randomized_tables(
    graph: &MultiCostGraph,
    rules: &[(NodeId, Vec<Option<HopRule>>)],
    rng: &mut impl Rng,
) -> RoutingTables {
    let mut t = RoutingTables::empty(graph.node_count());
    for (dest, per_node) in rules {
        for (x, rule) in per_node.iter().enumerate() {
            t.next[x][*dest] = match rule {
                None => None,
                Some(HopRule::Fixed(e)) => Some(*e),
                Some(HopRule::Coin { zero_first, zero_second }) => {
                    Some(if rng.random_bool(0.5) { *zero_first } else { *zero_second })
                }
            };
        }
    }
    t
}

/// Runs the randomized next-hop rule `trials` times against strict
/// `< (2a, 2a)` constraints. Trial `t` draws its coins from ChaCha20 stream `t`
/// of `seed`.
pub fn randomized_route(
    graph: &MultiCostGraph,
    pairs: &FeasiblePairSet,
    trials: usize,
    seed: u64,
) -> Result<RandomizedRouteReport> {
    require_two_metrics(graph)?;
    if pairs.is_empty() || trials == 0 {
        return Err(QrlError::InvalidArgument("need at least one pair and one trial".into()));
    }
    if let Some(p) = pairs.pairs().iter().find(|p| !(p.slack > 0.0)) {
        return Err(QrlError::InvalidArgument(format!("pair {} -> {} has zero slack", p.src, p.dst)));
    }
    let mut dests: Vec<NodeId> = pairs.pairs().iter().map(|p| p.dst).collect();
    dests.sort_unstable();
    dests.dedup();
    let rules = dests.iter().map(|&d| Ok((d, randomized_hop_rules(graph, d)?))).collect::<Result<Vec<_>>>()?;

    let fractions: Vec<f64> = (0..trials)
        .map(|t| {
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            rng.set_stream(t as u64);
            let tables = draw_randomized_tables(graph, &rules, &mut rng);
            let ok = pairs
                .pairs()
                .iter()
                .filter(|p| {
                    forward(graph, &tables, p.src, p.dst).cost().is_some_and(|c| c.iter().all(|x| *x < 2.0 * p.slack))
                })
                .count();
            ok as f64 / pairs.len() as f64
        })
        .collect();
    let m = fractions.len() as f64;
    let mean = fractions.iter().sum::<f64>() / m;
    let var =
        if fractions.len() > 1 { fractions.iter().map(|f| (f - mean).powi(2)).sum::<f64>() / (m - 1.0) } else { 0.0 };
    Ok(RandomizedRouteReport {
        pairs: pairs.len(),
        trials,
        mean_fraction: mean,
        stderr: (var / m).sqrt(),
        binomial_stderr: (0.25 / (m * pairs.len() as f64)).sqrt(),
    })
}

/// Summary emitted by the `adversarial` command.
#[derive(Debug, Clone, Serialize)]
pub struct AdversarialReport {
    pub k: usize,
    pub n: usize,
    pub mode: String,
    pub bound: f64,
    pub achieved: f64,
    pub fraction: f64,
    pub stderr: Option<f64>,
}

/// Bound check on the construction: exhaustive when small, otherwise the
/// structured table plus `samples` random ones.
pub fn adversarial_bound_report(k: usize, n: usize, samples: usize, seed: u64) -> Result<AdversarialReport> {
    let check = match bound_check_exhaustive(k, n) {
        Ok(c) => c,
        Err(QrlError::InvalidArgument(_)) => bound_check_sampled(k, n, samples, seed)?,
        Err(e) => return Err(e),
    };
    let total = ((k * n + 1) * (k * n + 1)) as f64;
    Ok(AdversarialReport {
        k,
        n,
        mode: "bound-check".into(),
        bound: check.bound as f64,
        achieved: check.best as f64,
        fraction: check.best as f64 / total,
        stderr: None,
    })
}

/// Sum-metric routing on the construction, slack from exhaustive search.
pub fn adversarial_sum_metric_report(k: usize, n: usize) -> Result<AdversarialReport> {
    let t = gen_adversarial(k, n, false)?;
    let pairs = FeasiblePairSet::brute_force(&t.graph, &all_pairs_with_self(t.graph.node_count()))?;
    let (_, report) = sum_metric_route(&t.graph, &pairs)?;
    Ok(AdversarialReport {
        k,
        n,
        mode: "sum-metric".into(),
        bound: report.checked as f64,
        achieved: report.delivered as f64,
        fraction: report.delivered as f64 / report.checked as f64,
        stderr: None,
    })
}

/// Randomized next-hop routing on the construction, slack from exhaustive search.
pub fn adversarial_randomized_report(k: usize, n: usize, trials: usize, seed: u64) -> Result<AdversarialReport> {
    let t = gen_adversarial(k, n, false)?;
    let pairs = FeasiblePairSet::brute_force(&t.graph, &all_pairs_with_self(t.graph.node_count()))?;
    let r = randomized_route(&t.graph, &pairs, trials, seed)?;
    Ok(AdversarialReport {
        k,
        n,
        mode: "randomized".into(),
        bound: 0.5,
        achieved: r.mean_fraction * r.pairs as f64,
        fraction: r.mean_fraction,
        stderr: Some(r.stderr),
    })
}
