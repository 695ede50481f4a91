mod common;

use common::{random_graph, random_integer_graph};
use proptest::prelude::*;
use qrl_core::classify::{classify_probe, Ledger, Verdict};
use qrl_core::envelope::envelope_scan;
use qrl_core::graph::EPS;
use qrl_core::paths::{find_feasible_path, simple_paths};
use qrl_core::spf::{spf_with_weights, EdgeWeights};
use qrl_core::topology::PairPolicy;
use qrl_core::{spf, Constraints, CostModel, CostVector, MixVector, PairSet, TopologySpec};

fn all_pairs(n: usize) -> PairSet {
    PairSet::new((0..n).flat_map(|u| (0..n).map(move |v| (u, v))).collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn spf_is_scale_invariant(seed in any::<u64>(), nodes in 2usize..9, extra in 0usize..16, q in 0usize..5, scale in prop::sample::select(vec![0.5, 2.0, 3.0, 10.0])) {
        let g = random_integer_graph(seed, nodes, extra, 2);
        let scaled = g.map_costs(|e| CostVector::new(e.costs.iter().map(|c| c * scale).collect()).unwrap()).unwrap();
        let mix = MixVector::scalar(q as f64 / 4.0).unwrap();
        let a = spf(&g, 0, &mix).unwrap();
        let b = spf(&scaled, 0, &mix).unwrap();
        prop_assert_eq!(a.parent_edges(), b.parent_edges());
    }

    #[test]
    fn normalization_matches_reweighting(seed in any::<u64>(), nodes in 2usize..9, extra in 0usize..16, q in 0usize..5,
                                         c1 in prop::sample::select(vec![1.0, 2.0, 4.0]), c2 in prop::sample::select(vec![1.0, 2.0, 4.0])) {
        let g = random_integer_graph(seed, nodes, extra, 2);
        let c = Constraints::strict(vec![c1, c2]).unwrap();
        let normalized = qrl_core::normalize(&g, &c).unwrap();
        let p = q as f64 / 4.0;
        let a = spf(&normalized, 0, &MixVector::scalar(p).unwrap()).unwrap();
        let w = EdgeWeights::from_coefficients(&g, &[p / c1, (1.0 - p) / c2]).unwrap();
        let b = spf_with_weights(&g, 0, &w).unwrap();
        prop_assert_eq!(a.parent_edges(), b.parent_edges());
    }

    #[test]
    fn spf_matches_brute_force(seed in any::<u64>(), nodes in 2usize..8, extra in 0usize..12, p in 0.0f64..=1.0) {
        let g = random_graph(seed, nodes, extra, 2, 1.0);
        let mix = MixVector::scalar(p).unwrap();
        let tree = spf(&g, 0, &mix).unwrap();
        for v in 0..nodes {
            let best = simple_paths(&g, 0, v)
                .iter()
                .map(|path| p * path.cost[0] + (1.0 - p) * path.cost[1])
                .fold(f64::INFINITY, f64::min);
            prop_assert!((tree.dist(v) - best).abs() < 1e-9, "node {}: {} vs {}", v, tree.dist(v), best);
            let c = tree.cost(v).unwrap();
            prop_assert!((p * c[0] + (1.0 - p) * c[1] - tree.dist(v)).abs() < 1e-9);
        }
    }

    #[test]
    fn pruning_is_sound(seed in any::<u64>(), nodes in 2usize..8, extra in 0usize..12, p in 0.0f64..=1.0) {
        let g = random_graph(seed, nodes, extra, 2, 0.7);
        let pairs = all_pairs(nodes);
        let out = classify_probe(&g, &pairs, &MixVector::scalar(p).unwrap()).unwrap();
        let unit = Constraints::unit(2);
        for (&(u, v), verdict) in pairs.pairs().iter().zip(&out.verdicts) {
            let feasible = find_feasible_path(&g, u, v, &unit).is_some();
            match verdict {
                Verdict::NonSatisfied => prop_assert!(!feasible, "{} -> {} pruned but feasible", u, v),
                Verdict::Satisfied => prop_assert!(feasible),
                Verdict::Uncertain => {}
            }
        }
    }

    #[test]
    fn ledger_is_monotone(seed in any::<u64>(), nodes in 2usize..8, extra in 0usize..12, ps in prop::collection::vec(0.0f64..=1.0, 1..8)) {
        let g = random_graph(seed, nodes, extra, 2, 0.7);
        let pairs = all_pairs(nodes);
        let mut ledger = Ledger::new(pairs.len());
        let mut prev = ledger.clone();
        for p in ps {
            let out = classify_probe(&g, &pairs, &MixVector::scalar(p).unwrap()).unwrap();
            ledger.merge(&out.verdicts);
            let (a, b) = (prev.counts(), ledger.counts());
            prop_assert!(b.n_y >= a.n_y && b.n_n >= a.n_n && b.n_u <= a.n_u);
            prop_assert_eq!(b.n_y + b.n_n + b.n_u, b.n_tot);
            for (old, new) in prev.verdicts().iter().zip(ledger.verdicts()) {
                if *old != Verdict::Uncertain {
                    prop_assert_eq!(old, new);
                }
            }
            prev = ledger.clone();
        }
    }

    #[test]
    fn envelope_is_concave(seed in any::<u64>(), nodes in 2usize..10, extra in 0usize..20, dst in 1usize..10) {
        let g = random_graph(seed, nodes, extra, 2, 1.0);
        let env = envelope_scan(&g, 0, dst % nodes, 41).unwrap();
        prop_assert!(env.concave);
    }

    #[test]
    fn satisfied_paths_meet_constraints(seed in any::<u64>(), nodes in 2usize..9, extra in 0usize..16, p in 0.0f64..=1.0) {
        let g = random_graph(seed, nodes, extra, 2, 0.6);
        let mix = MixVector::scalar(p).unwrap();
        let pairs = PairSet::new((1..nodes).map(|v| (0, v)).collect());
        let out = classify_probe(&g, &pairs, &mix).unwrap();
        let tree = spf(&g, 0, &mix).unwrap();
        for (&(_, v), verdict) in pairs.pairs().iter().zip(&out.verdicts) {
            let c = tree.cost(v).unwrap();
            let inside = c.iter().all(|x| *x < 1.0);
            prop_assert_eq!(*verdict == Verdict::Satisfied, inside);
            if *verdict == Verdict::NonSatisfied {
                prop_assert!(tree.dist(v) >= 1.0 - EPS);
            }
        }
    }
}

#[test]
fn generators_are_deterministic() {
    for spec in [
        TopologySpec::Grid { rows: 7, cols: 5 },
        TopologySpec::DualHome { total_nodes: 60, core_pairs: 4 },
        TopologySpec::MouthLike { total_nodes: 61, core_pairs: 3, variant: Default::default() },
    ] {
        let a = spec.build(3).unwrap();
        let b = spec.build(3).unwrap();
        assert_eq!(a.graph, b.graph);
        let model = CostModel::latency_loss_jitter(3, 17).unwrap();
        let ga = a.with_costs(&model).unwrap();
        assert_eq!(ga, b.with_costs(&model).unwrap());
        assert_ne!(ga, a.with_costs(&model.with_seed(18)).unwrap());
        assert!(ga.is_strongly_connected());
        assert!(a.pair_set(PairPolicy::AllToAll).unwrap().len() == a.graph.node_count() * (a.graph.node_count() - 1));
    }
}
