//! Optimal mix on a bundle of parallel paths.
//!
//! Between two nodes joined by independent parallel paths, the composite
//! shortest path satisfies the constraints with probability `P(A)`. For small
//! constraints the maximizing mix is the closed form [`best_p_formula`];
//! [`montecarlo_sweep`] estimates `P(A)` directly.

use rayon::prelude::*;
use serde::Serialize;

use crate::costs::CostModel;
use crate::error::{QrlError, Result};
use crate::graph::{dot, Constraints, MixVector, MultiCostGraph};

/// `p = (C2 - b1) / ((C2 - b1) + (C1 - a1))` for two metrics, where `(a1, b1)`
/// are the smallest attainable first and second costs.
pub fn best_p_formula(a1: f64, b1: f64, c1: f64, c2: f64) -> Result<f64> {
    if !(c1 > a1 && c2 > b1) {
        return Err(QrlError::InvalidArgument(format!(
            "need C1 > a1 and C2 > b1, got C1={c1}, a1={a1}, C2={c2}, b1={b1}"
        )));
    }
    let num = c2 - b1;
    let den = num + (c1 - a1);
    if !(den > 0.0) || !den.is_finite() {
        return Err(QrlError::InvalidArgument(format!("denominator {den} is not positive")));
    }
    Ok(num / den)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub probability: f64,
    pub stderr: f64,
    pub samples: usize,
}

impl Estimate {
    fn from_hits(hits: u64, samples: usize) -> Self {
        let p = hits as f64 / samples as f64;
        Estimate { probability: p, stderr: (p * (1.0 - p) / samples as f64).sqrt(), samples }
    }
}

const CHUNK: usize = 4096;

/// Estimates `P(A)` at each mix from the same cost draws.
///
/// Sample `s` draws every path's costs, in edge order, from substream
/// `s / 4096` of the model seed, so results do not depend on thread count and
/// differences between mixes are not blurred by independent noise.
pub fn montecarlo_sweep(
    scheme: &MultiCostGraph,
    model: &CostModel,
    constraints: &Constraints,
    mixes: &[MixVector],
    samples: usize,
) -> Result<Vec<Estimate>> {
    if samples < 100 {
        return Err(QrlError::InvalidArgument(format!("need at least 100 samples, got {samples}")));
    }
    model.validate()?;
    let k = scheme.k();
    if model.dims.len() != k {
        return Err(QrlError::DimensionMismatch { expected: k, got: model.dims.len() });
    }
    if constraints.bounds().len() != k {
        return Err(QrlError::DimensionMismatch { expected: k, got: constraints.bounds().len() });
    }
    if let Some(m) = mixes.iter().find(|m| m.dim() != k) {
        return Err(QrlError::DimensionMismatch { expected: k, got: m.dim() });
    }
    let paths = scheme.edge_count();
    if paths == 0 || scheme.edges().iter().any(|e| e.src != scheme.edges()[0].src || e.dst != scheme.edges()[0].dst) {
        return Err(QrlError::InvalidArgument("scheme must be a non-empty bundle of parallel edges".into()));
    }

    let chunks = samples.div_ceil(CHUNK);
    let hits: Vec<Vec<u64>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = model.stream(c as u64);
            let mut costs = vec![0.0; paths * k];
            let mut hits = vec![0u64; mixes.len()];
            let len = CHUNK.min(samples - c * CHUNK);
            for _ in 0..len {
                for path in costs.chunks_mut(k) {
                    model.sample_into(&mut rng, path);
                }
                for (m, mix) in mixes.iter().enumerate() {
                    let mut best = 0;
                    let mut best_w = f64::INFINITY;
                    for (i, path) in costs.chunks(k).enumerate() {
                        let w = dot(path, mix.as_slice());
                        if w < best_w {
                            best_w = w;
                            best = i;
                        }
                    }
                    if constraints.is_satisfied_by(&costs[best * k..(best + 1) * k]) {
                        hits[m] += 1;
                    }
                }
            }
            hits
        })
        .collect();
    Ok((0..mixes.len()).map(|m| Estimate::from_hits(hits.iter().map(|h| h[m]).sum(), samples)).collect())
}

/// Estimates `P(A)` at one mix.
pub fn montecarlo_pa(
    scheme: &MultiCostGraph,
    model: &CostModel,
    constraints: &Constraints,
    mix: &MixVector,
    samples: usize,
) -> Result<Estimate> {
    Ok(montecarlo_sweep(scheme, model, constraints, std::slice::from_ref(mix), samples)?[0])
}

/// Index of the largest estimate, the first one on ties.
pub fn argmax(estimates: &[Estimate]) -> Option<usize> {
    estimates
        .iter()
        .enumerate()
        .fold(None, |best: Option<(usize, f64)>, (i, e)| match best {
            Some((_, b)) if b >= e.probability => best,
            _ => Some((i, e.probability)),
        })
        .map(|(i, _)| i)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::gen_transmit_scheme;

    #[test]
    fn formula_values() {
        assert_eq!(best_p_formula(0.0, 0.0, 0.3, 0.3).unwrap(), 0.5);
        assert!((best_p_formula(0.1, 0.0, 0.3, 0.3).unwrap() - 0.6).abs() < 1e-12);
        assert!(best_p_formula(0.3, 0.0, 0.3, 0.3).is_err());
        assert!(best_p_formula(0.0, 0.5, 0.3, 0.3).is_err());
    }

    #[test]
    fn trivial_probabilities() {
        let g = gen_transmit_scheme(5, 2).unwrap().graph;
        let model = CostModel::uniform(2, 0.0, 1.0, 3);
        let loose = Constraints::strict(vec![1.5, 1.5]).unwrap();
        let tight = Constraints::strict(vec![1e-12, 1e-12]).unwrap();
        let mix = MixVector::scalar(0.5).unwrap();
        assert_eq!(montecarlo_pa(&g, &model, &loose, &mix, 1000).unwrap().probability, 1.0);
        assert_eq!(montecarlo_pa(&g, &model, &tight, &mix, 1000).unwrap().probability, 0.0);
        assert!(montecarlo_pa(&g, &model, &loose, &mix, 99).is_err());
    }

    #[test]
    fn single_path_matches_product() {
        // one path: P(A) = P(x < 0.3) P(y < 0.3) = 0.09 whatever the mix
        let g = gen_transmit_scheme(1, 2).unwrap().graph;
        let model = CostModel::uniform(2, 0.0, 1.0, 11);
        let c = Constraints::strict(vec![0.3, 0.3]).unwrap();
        let e = montecarlo_pa(&g, &model, &c, &MixVector::scalar(0.2).unwrap(), 40_000).unwrap();
        assert!((e.probability - 0.09).abs() < 4.0 * e.stderr);
    }

    #[test]
    fn sweep_is_deterministic() {
        let g = gen_transmit_scheme(4, 2).unwrap().graph;
        let model = CostModel::uniform(2, 0.0, 1.0, 5);
        let c = Constraints::strict(vec![0.4, 0.4]).unwrap();
        let mixes: Vec<_> = (0..=4).map(|i| MixVector::scalar(i as f64 / 4.0).unwrap()).collect();
        let a = montecarlo_sweep(&g, &model, &c, &mixes, 10_000).unwrap();
        let b = montecarlo_sweep(&g, &model, &c, &mixes, 10_000).unwrap();
        assert_eq!(a, b);
        // symmetric model: the curve is roughly symmetric about p = 1/2
        assert!((a[0].probability - a[4].probability).abs() < 0.03);
    }

    #[test]
    fn argmax_prefers_first() {
        let e = |p| Estimate { probability: p, stderr: 0.0, samples: 1 };
        assert_eq!(argmax(&[e(0.1), e(0.4), e(0.4)]), Some(1));
        assert_eq!(argmax(&[]), None);
    }
}
