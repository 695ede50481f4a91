//! Benchmark fixtures shared by the criterion targets.

use qrl_core::{derive_constraints, normalize, CostModel, MultiCostGraph, PairPolicy, PairSet, TopologySpec};

/// A normalized `side x side` grid with the default two-metric cost model and
/// its all-ordered pair set.
pub fn normalized_grid(side: usize, seed: u64, alpha: f64) -> (MultiCostGraph, PairSet) {
    let topo = TopologySpec::Grid { rows: side, cols: side }.build(2).expect("grid");
    let model = CostModel::latency_loss_jitter(2, seed).expect("model");
    let graph = topo.with_costs(&model).expect("costs");
    let pairs = topo.pair_set(PairPolicy::AllOrderedWithSelf).expect("pairs");
    let c = derive_constraints(&graph, &pairs, alpha).expect("constraints");
    (normalize(&graph, &c).expect("normalize"), pairs)
}
