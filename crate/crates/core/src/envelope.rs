//! Shape of the composite distance as a function of the mix.
//!
//! For a fixed pair, `g(p) = min over paths (p * x + (1 - p) * y)` is a minimum
//! of linear functions of `p` and therefore concave and piecewise linear. Its
//! slope at `p` is `x_sh - y_sh` of the path that attains it, so as `p` grows
//! the shortest path's first cost cannot grow and its second cannot shrink.

use serde::Serialize;

use crate::error::{QrlError, Result};
use crate::graph::{MixVector, MultiCostGraph, NodeId, EPS};
use crate::spf::{spf, spf_with_weights, EdgeWeights};

#[derive(Debug, Clone, Serialize)]
pub struct EnvelopeSample {
    /// `(p, g(p))` at evenly spaced `p` from 0 to 1.
    pub samples: Vec<(f64, f64)>,
    /// Whether every sampled midpoint clears its chord.
    pub concave: bool,
}

impl EnvelopeSample {
    pub fn peak(&self) -> (f64, f64) {
        self.samples.iter().copied().fold((f64::NAN, f64::NEG_INFINITY), |best, s| if s.1 > best.1 { s } else { best })
    }
}

/// Number of sample pairs `(i, j)` whose midpoint `(i + j) / 2` falls below
/// the chord: `g(mid) < (g_i + g_j) / 2 - 1e-9`. Samples must be evenly spaced.
pub fn midpoint_violations(values: &[f64]) -> usize {
    let n = values.len();
    let mut bad = 0;
    for i in 0..n {
        for j in (i + 2..n).step_by(2) {
            if values[(i + j) / 2] < 0.5 * (values[i] + values[j]) - EPS {
                bad += 1;
            }
        }
    }
    bad
}

/// Samples `g(p)` for `src -> dst` at `probe_count` evenly spaced `p`.
pub fn envelope_scan(graph: &MultiCostGraph, src: NodeId, dst: NodeId, probe_count: usize) -> Result<EnvelopeSample> {
    if graph.k() != 2 {
        return Err(QrlError::DimensionMismatch { expected: 2, got: graph.k() });
    }
    if probe_count < 3 {
        return Err(QrlError::InvalidArgument(format!("need at least 3 probes, got {probe_count}")));
    }
    graph.check_node(dst)?;
    let mut samples = Vec::with_capacity(probe_count);
    for i in 0..probe_count {
        let p = i as f64 / (probe_count - 1) as f64;
        let weights = EdgeWeights::from_mix(graph, &MixVector::scalar(p)?)?;
        let tree = spf_with_weights(graph, src, &weights)?;
        let g = tree.dist_composite(dst).ok_or(QrlError::Unreachable { src, dst })?;
        samples.push((p, g));
    }
    let values: Vec<f64> = samples.iter().map(|s| s.1).collect();
    Ok(EnvelopeSample { concave: midpoint_violations(&values) == 0, samples })
}

/// With `(w1, w2)` the shortest path at `p_low` and `(v1, v2)` the one at
/// `p_high`, checks `w1 >= v1` and `w2 <= v2` (within 1e-9).
pub fn monotonicity_check(graph: &MultiCostGraph, src: NodeId, dst: NodeId, p_low: f64, p_high: f64) -> Result<bool> {
    if graph.k() != 2 {
        return Err(QrlError::DimensionMismatch { expected: 2, got: graph.k() });
    }
    if !(p_low < p_high) {
        return Err(QrlError::InvalidArgument(format!("need p_low < p_high, got {p_low} and {p_high}")));
    }
    graph.check_node(dst)?;
    let at = |p: f64| -> Result<Vec<f64>> {
        let tree = spf(graph, src, &MixVector::scalar(p)?)?;
        tree.cost(dst).map(<[f64]>::to_vec).ok_or(QrlError::Unreachable { src, dst })
    };
    let w = at(p_low)?;
    let v = at(p_high)?;
    Ok(w[0] >= v[0] - EPS && w[1] <= v[1] + EPS)
}
