//! Multi-constrained routing laboratory.
//!
//! Edges carry `k` additive costs. Routing mixes them into a single composite
//! weight `sum_i p_i w_i`, runs ordinary shortest-path trees, and checks the
//! found paths against per-dimension constraints. The crate covers:
//!
//! * [`graph`] and [`spf`]: multigraphs, normalization and deterministic
//!   composite shortest-path trees;
//! * [`classify`]: satisfied / non-satisfied / uncertain verdicts and their
//!   accumulation over probed mixes;
//! * [`optimize`] and [`envelope`]: searching the mix that maximizes
//!   satisfied pairs, and the concavity / monotonicity structure behind it;
//! * [`topology`] and [`costs`]: graph families and seeded cost models;
//! * [`routing`] and [`montecarlo`]: table-driven forwarding on adversarial
//!   constructions and the optimal-mix estimate for parallel paths;
//! * [`harness`]: end-to-end parameter sweeps producing CSV rows.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` also rejects NaN

pub mod classify;
pub mod costs;
pub mod envelope;
pub mod error;
pub mod graph;
pub mod harness;
pub mod montecarlo;
pub mod optimize;
pub mod paths;
pub mod report;
pub mod routing;
pub mod spf;
pub mod topology;

pub use classify::{
    classify_probe, discovery_rate, merge_probe, Counts, Ledger, PairSet, ProbeOutcome, PruneCounters, Verdict,
};
pub use costs::{assign_costs, derive_constraints, CostModel, Distribution};
pub use error::{QrlError, Result};
pub use graph::{
    composite_weight, normalize, Constraints, CostVector, Edge, EdgeId, MixVector, MultiCostGraph, NodeId, Strictness,
};
pub use harness::{run_experiment, summarize, ExperimentConfig, Mode, ResultRow};
pub use montecarlo::{best_p_formula, montecarlo_pa, montecarlo_sweep, Estimate};
pub use optimize::{optimize_p, SearchStrategy, SearchTrace, StrategyKind};
pub use routing::{forward, ForwardResult, RoutingTables};
pub use spf::{shortest_cost_vector, spf, SpfTree};
pub use topology::{PairPolicy, Topology, TopologySpec};
