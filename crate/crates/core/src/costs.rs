//! Seeded random edge costs and constraints derived from them.
//!
//! Sampling uses ChaCha20 with one stream per cost-sharing link: the
//! generator for link `l` is `ChaCha20Rng::seed_from_u64(seed)` switched to
//! stream `l`, and dimensions are drawn in order from it. Results therefore
//! do not depend on evaluation order or thread count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution as _, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classify::PairSet;
use crate::error::{QrlError, Result};
use crate::graph::{Constraints, CostVector, EdgeId, MixVector, MultiCostGraph};
use crate::spf::{spf_with_weights, EdgeWeights};
use crate::topology::Topology;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "dist", rename_all = "kebab-case")]
pub enum Distribution {
    /// Gaussian, resampled until positive.
    Normal {
        mean: f64,
        variance: f64,
    },
    /// Gaussian restricted to positive values (see [`PositiveRule`]).
    PositiveNormal {
        mean: f64,
        variance: f64,
    },
    DiscreteUniform {
        values: Vec<f64>,
    },
    Uniform {
        lo: f64,
        hi: f64,
    },
}

/// How `PositiveNormal` reaches positive values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PositiveRule {
    /// Rejection-resample non-positive draws.
    #[default]
    Truncate,
    /// Take `|x|`.
    Fold,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostModel {
    pub dims: Vec<Distribution>,
    pub seed: u64,
    /// Read the `variance` fields as standard deviations instead.
    #[serde(default)]
    pub variance_is_std: bool,
    #[serde(default)]
    pub positive_rule: PositiveRule,
}

impl CostModel {
    /// Latency `~ Normal(7.5, var 1.25)`, loss `~ U{0.01, ..., 0.05}` and, for
    /// three metrics, jitter `~ PositiveNormal(2.0, var 2.0)`.
    pub fn latency_loss_jitter(k: usize, seed: u64) -> Result<Self> {
        let mut dims = vec![
            Distribution::Normal { mean: 7.5, variance: 1.25 },
            Distribution::DiscreteUniform { values: vec![0.01, 0.02, 0.03, 0.04, 0.05] },
            Distribution::PositiveNormal { mean: 2.0, variance: 2.0 },
        ];
        if !(1..=3).contains(&k) {
            return Err(QrlError::InvalidModel(format!("no default cost model for k = {k}")));
        }
        dims.truncate(k);
        Ok(CostModel { dims, seed, variance_is_std: false, positive_rule: PositiveRule::Truncate })
    }

    /// `k` independent `Uniform(lo, hi)` dimensions.
    pub fn uniform(k: usize, lo: f64, hi: f64, seed: u64) -> Self {
        CostModel {
            dims: vec![Distribution::Uniform { lo, hi }; k],
            seed,
            variance_is_std: false,
            positive_rule: PositiveRule::Truncate,
        }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        CostModel { seed, ..self.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dims.is_empty() {
            return Err(QrlError::InvalidModel("no dimensions".into()));
        }
        for d in &self.dims {
            match d {
                Distribution::Normal { mean, variance } | Distribution::PositiveNormal { mean, variance } => {
                    if !mean.is_finite() || !(*variance >= 0.0) || !variance.is_finite() {
                        return Err(QrlError::InvalidModel(format!("bad normal parameters {mean}, {variance}")));
                    }
                    if *mean <= 0.0 && *variance == 0.0 {
                        return Err(QrlError::InvalidModel("normal distribution has no positive mass".into()));
                    }
                }
                Distribution::DiscreteUniform { values } => {
                    if values.is_empty() || values.iter().any(|v| !v.is_finite() || *v < 0.0) {
                        return Err(QrlError::InvalidModel(format!("bad discrete support {values:?}")));
                    }
                }
                Distribution::Uniform { lo, hi } => {
                    if !(0.0 <= *lo && lo <= hi && hi.is_finite()) {
                        return Err(QrlError::InvalidModel(format!("bad uniform range [{lo}, {hi})")));
                    }
                }
            }
        }
        Ok(())
    }

    fn std_dev(&self, variance: f64) -> f64 {
        if self.variance_is_std {
            variance
        } else {
            variance.sqrt()
        }
    }

    fn draw(&self, dist: &Distribution, rng: &mut impl Rng) -> f64 {
        match dist {
            Distribution::Normal { mean, variance } => {
                let n = Normal::new(*mean, self.std_dev(*variance)).expect("validated");
                loop {
                    let x = n.sample(rng);
                    if x > 0.0 {
                        return x;
                    }
                }
            }
            Distribution::PositiveNormal { mean, variance } => {
                let n = Normal::new(*mean, self.std_dev(*variance)).expect("validated");
                loop {
                    let x = match self.positive_rule {
                        PositiveRule::Truncate => n.sample(rng),
                        PositiveRule::Fold => n.sample(rng).abs(),
                    };
                    if x > 0.0 {
                        return x;
                    }
                }
            }
            Distribution::DiscreteUniform { values } => values[rng.random_range(0..values.len())],
            Distribution::Uniform { lo, hi } => lo + (hi - lo) * rng.random::<f64>(),
        }
    }

    /// One cost vector, drawing every dimension in order from `rng`.
    pub fn sample_vector(&self, rng: &mut impl Rng) -> Vec<f64> {
        self.dims.iter().map(|d| self.draw(d, rng)).collect()
    }

    /// Fills `out` (length `k`) without allocating.
    pub fn sample_into(&self, rng: &mut impl Rng, out: &mut [f64]) {
        for (slot, d) in out.iter_mut().zip(&self.dims) {
            *slot = self.draw(d, rng);
        }
    }

    /// The generator for substream `stream`.
    pub fn stream(&self, stream: u64) -> ChaCha20Rng {
        let mut rng = ChaCha20Rng::seed_from_u64(self.seed);
        rng.set_stream(stream);
        rng
    }
}

/// Groups edges that are exact reverses of their predecessor into one link,
/// the layout undirected generators emit. Every other edge is its own link.
pub fn links_from_arc_pairs(graph: &MultiCostGraph) -> Vec<Vec<EdgeId>> {
    let mut links: Vec<Vec<EdgeId>> = Vec::new();
    let edges = graph.edges();
    let mut e = 0;
    while e < edges.len() {
        if e + 1 < edges.len() && edges[e + 1].src == edges[e].dst && edges[e + 1].dst == edges[e].src {
            links.push(vec![e, e + 1]);
            e += 2;
        } else {
            links.push(vec![e]);
            e += 1;
        }
    }
    links
}

/// Samples one cost vector per link and gives it to every edge of the link.
pub fn assign_costs(graph: &MultiCostGraph, links: &[Vec<EdgeId>], model: &CostModel) -> Result<MultiCostGraph> {
    model.validate()?;
    if model.dims.len() != graph.k() {
        return Err(QrlError::DimensionMismatch { expected: graph.k(), got: model.dims.len() });
    }
    let mut costs: Vec<Option<CostVector>> = vec![None; graph.edge_count()];
    for (l, link) in links.iter().enumerate() {
        let mut rng = model.stream(l as u64);
        let c = CostVector::new(model.sample_vector(&mut rng))?;
        for &e in link {
            let slot =
                costs.get_mut(e).ok_or_else(|| QrlError::InvalidModel(format!("link {l} names missing edge {e}")))?;
            if slot.is_some() {
                return Err(QrlError::InvalidModel(format!("edge {e} belongs to two links")));
            }
            *slot = Some(c.clone());
        }
    }
    if let Some(e) = costs.iter().position(Option::is_none) {
        return Err(QrlError::InvalidModel(format!("edge {e} belongs to no link")));
    }
    graph.map_costs(|e| costs[e.id].take().expect("checked above"))
}

impl Topology {
    /// The topology's graph with costs drawn from `model`.
    pub fn with_costs(&self, model: &CostModel) -> Result<MultiCostGraph> {
        assign_costs(&self.graph, &self.links, model)
    }
}

/// `C_i = alpha * M_i`, where `M_i` is the largest `W_i` cost over the pairs'
/// single-metric (`w = W_i`) shortest paths.
pub fn derive_constraints(graph: &MultiCostGraph, pairs: &PairSet, alpha: f64) -> Result<Constraints> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(QrlError::InvalidConstraint(format!("alpha = {alpha} must be positive")));
    }
    pairs.check(graph)?;
    let groups = pairs.by_source();
    let mut bounds = Vec::with_capacity(graph.k());
    for i in 0..graph.k() {
        let weights = EdgeWeights::from_mix(graph, &MixVector::unit(graph.k(), i)?)?;
        let per_source = groups
            .par_iter()
            .map(|(source, idxs)| {
                let tree = spf_with_weights(graph, *source, &weights)?;
                let mut m = 0.0f64;
                for &p in idxs {
                    let dst = pairs.pairs()[p].1;
                    let c = tree.cost(dst).ok_or(QrlError::Unreachable { src: *source, dst })?;
                    m = m.max(c[i]);
                }
                Ok(m)
            })
            .collect::<Result<Vec<f64>>>()?;
        let m = per_source.into_iter().fold(0.0, f64::max);
        if !(m > 0.0) {
            return Err(QrlError::InvalidConstraint(format!(
                "dimension {i} has zero maximal shortest-path cost over the pair set"
            )));
        }
        bounds.push(alpha * m);
    }
    Constraints::strict(bounds)
}
