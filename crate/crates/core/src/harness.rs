//! Parameter sweeps: topology x cost realization x alpha x mode.
//!
//! Every `(alpha, seed)` cell is independent. Cells run on a worker pool and
//! rows come back ordered by the config's alpha list, then seed list, then
//! mode list, so the CSV is the same whatever the thread count.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classify::{Counts, PairSet};
use crate::costs::{derive_constraints, CostModel};
use crate::error::{QrlError, Result};
use crate::graph::{normalize, Constraints};
use crate::optimize::{optimize_p, special_node_pairs, SearchStrategy};
use crate::report::{fmt_float, fmt_mix};
use crate::topology::{PairPolicy, TopologySpec};

pub const RESULT_HEADER: [&str; 14] = [
    "topology",
    "pair_policy",
    "k",
    "alpha",
    "seed",
    "mode",
    "p_opt",
    "N_tot",
    "N_y",
    "N_n",
    "N_u",
    "R",
    "probes",
    "wall_ms",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// Ledger of the best single probe.
    SinglePAllToAll,
    /// Ledger accumulated over every probe.
    MultiplePAllToAll,
    /// Accumulated ledger of the pairs leaving the lowest-numbered source.
    OneToAllSpecialNode,
}

impl Mode {
    pub fn label(self) -> &'static str {
        match self {
            Mode::SinglePAllToAll => "single-p-all-to-all",
            Mode::MultiplePAllToAll => "multiple-p-all-to-all",
            Mode::OneToAllSpecialNode => "one-to-all-special-node",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub topology: TopologySpec,
    pub k: usize,
    /// Its `seed` is replaced by each entry of `seeds`.
    pub cost_model: CostModel,
    pub alphas: Vec<f64>,
    pub seeds: Vec<u64>,
    pub strategy: SearchStrategy,
    pub modes: Vec<Mode>,
    #[serde(default)]
    pub pair_policy: PairPolicy,
    /// Fill `wall_ms`; off by default so repeated runs are byte-identical.
    #[serde(default)]
    pub record_timing: bool,
}

fn invalid(field: &str, reason: impl Into<String>) -> QrlError {
    QrlError::InvalidConfig { field: field.into(), reason: reason.into() }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        match self.topology {
            TopologySpec::Grid { .. } | TopologySpec::DualHome { .. } | TopologySpec::MouthLike { .. } => {}
            _ => {
                return Err(invalid(
                    "topology",
                    format!("{} has fixed costs; use grid, dual-home or mouth-like", self.topology.label()),
                ))
            }
        }
        if self.k == 0 {
            return Err(invalid("k", "must be at least 1"));
        }
        if self.cost_model.dims.len() != self.k {
            return Err(invalid("cost_model", format!("{} dimensions for k = {}", self.cost_model.dims.len(), self.k)));
        }
        self.cost_model.validate().map_err(|e| invalid("cost_model", e.to_string()))?;
        if self.alphas.is_empty() {
            return Err(invalid("alphas", "empty"));
        }
        if let Some(a) = self.alphas.iter().find(|a| !(**a > 0.0 && **a <= 2.0)) {
            return Err(invalid("alphas", format!("{a} outside (0, 2]")));
        }
        if self.seeds.is_empty() {
            return Err(invalid("seeds", "empty"));
        }
        if self.modes.is_empty() {
            return Err(invalid("modes", "empty"));
        }
        self.strategy.validate(self.k).map_err(|e| invalid("strategy", e.to_string()))?;
        if self.pair_policy == PairPolicy::BorderToBorder && !matches!(self.topology, TopologySpec::Grid { .. }) {
            return Err(invalid("pair_policy", "border-to-border needs a grid"));
        }
        Ok(())
    }
}

/// One CSV line of the results file.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub topology: String,
    pub pair_policy: String,
    pub k: usize,
    pub alpha: f64,
    pub seed: u64,
    pub mode: Mode,
    /// Best mix, `;`-joined when `k > 2`.
    pub p_opt: String,
    pub counts: Counts,
    pub probes: usize,
    pub wall_ms: u64,
}

impl ResultRow {
    fn record(&self) -> [String; 14] {
        let c = &self.counts;
        [
            self.topology.clone(),
            self.pair_policy.clone(),
            self.k.to_string(),
            fmt_float(self.alpha),
            self.seed.to_string(),
            self.mode.label().into(),
            self.p_opt.clone(),
            c.n_tot.to_string(),
            c.n_y.to_string(),
            c.n_n.to_string(),
            c.n_u.to_string(),
            fmt_float(c.discovery_rate()),
            self.probes.to_string(),
            self.wall_ms.to_string(),
        ]
    }
}

pub fn write_results(rows: &[ResultRow], writer: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(RESULT_HEADER)?;
    for r in rows {
        w.write_record(r.record())?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Deserialize)]
struct RawRow {
    topology: String,
    pair_policy: String,
    k: usize,
    alpha: f64,
    seed: u64,
    mode: Mode,
    p_opt: String,
    #[serde(rename = "N_tot")]
    n_tot: usize,
    #[serde(rename = "N_y")]
    n_y: usize,
    #[serde(rename = "N_n")]
    n_n: usize,
    #[serde(rename = "N_u")]
    n_u: usize,
    #[serde(rename = "R")]
    _r: f64,
    probes: usize,
    wall_ms: u64,
}

pub fn read_results(reader: impl Read) -> Result<Vec<ResultRow>> {
    let mut r = csv::Reader::from_reader(reader);
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header != RESULT_HEADER {
        return Err(QrlError::InvalidArgument(format!("unexpected results header {header:?}")));
    }
    r.deserialize::<RawRow>()
        .map(|row| {
            let row = row?;
            let counts = Counts { n_tot: row.n_tot, n_y: row.n_y, n_n: row.n_n, n_u: row.n_u };
            if counts.n_y + counts.n_n + counts.n_u != counts.n_tot {
                return Err(QrlError::InvalidArgument(format!("counters of seed {} do not add up", row.seed)));
            }
            Ok(ResultRow {
                topology: row.topology,
                pair_policy: row.pair_policy,
                k: row.k,
                alpha: row.alpha,
                seed: row.seed,
                mode: row.mode,
                p_opt: row.p_opt,
                counts,
                probes: row.probes,
                wall_ms: row.wall_ms,
            })
        })
        .collect()
}

/// Worker count from `QRL_THREADS`, else the available parallelism.
pub fn worker_count() -> usize {
    std::env::var("QRL_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|n| *n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, usize::from))
}

fn scale(base: &Constraints, alpha: f64) -> Result<Constraints> {
    Constraints::strict(base.bounds().iter().map(|b| alpha * b).collect())
}

/// Runs every `(alpha, seed)` cell of a validated config.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    config.validate()?;
    let topo = config.topology.build(config.k)?;
    if !topo.graph.is_strongly_connected() {
        return Err(invalid("topology", "generated graph is disconnected"));
    }
    let pairs = topo.pair_set(config.pair_policy)?;
    let special = special_node_pairs(&pairs)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(worker_count())
        .build()
        .map_err(|e| QrlError::InvalidArgument(format!("thread pool: {e}")))?;

    pool.install(|| {
        // cost realizations and their alpha = 1 constraints, one per seed
        let realizations = config
            .seeds
            .par_iter()
            .map(|&seed| {
                let graph = topo.with_costs(&config.cost_model.with_seed(seed))?;
                let base = derive_constraints(&graph, &pairs, 1.0)?;
                Ok((graph, base))
            })
            .collect::<Result<Vec<_>>>()?;

        let cells: Vec<(usize, usize)> =
            (0..config.alphas.len()).flat_map(|a| (0..config.seeds.len()).map(move |s| (a, s))).collect();
        let rows = cells
            .par_iter()
            .map(|&(a, s)| {
                let (graph, base) = &realizations[s];
                run_cell(config, graph, base, &pairs, &special, config.alphas[a], config.seeds[s])
            })
            .collect::<Result<Vec<Vec<ResultRow>>>>()?;
        Ok(rows.into_iter().flatten().collect())
    })
}

fn run_cell(
    config: &ExperimentConfig,
    graph: &crate::graph::MultiCostGraph,
    base: &Constraints,
    pairs: &PairSet,
    special: &PairSet,
    alpha: f64,
    seed: u64,
) -> Result<Vec<ResultRow>> {
    let normalized = normalize(graph, &scale(base, alpha)?)?;
    let fmt_p =
        |mix: &crate::graph::MixVector| if config.k == 2 { fmt_float(mix.p()) } else { fmt_mix(mix.as_slice()) };
    let mut all_to_all = None;
    let mut rows = Vec::with_capacity(config.modes.len());
    for &mode in &config.modes {
        let start = Instant::now();
        let trace = match mode {
            Mode::SinglePAllToAll | Mode::MultiplePAllToAll => {
                if all_to_all.is_none() {
                    all_to_all = Some(optimize_p(&normalized, pairs, &config.strategy)?);
                }
                all_to_all.clone().expect("set above")
            }
            Mode::OneToAllSpecialNode => optimize_p(&normalized, special, &config.strategy)?,
        };
        let counts = match mode {
            Mode::SinglePAllToAll => trace.best_single(),
            _ => trace.ledger.counts(),
        };
        rows.push(ResultRow {
            topology: config.topology.label(),
            pair_policy: config.pair_policy.label().into(),
            k: config.k,
            alpha,
            seed,
            mode,
            p_opt: fmt_p(&trace.best_mix),
            counts,
            probes: trace.probes.len(),
            wall_ms: if config.record_timing { start.elapsed().as_millis() as u64 } else { 0 },
        });
    }
    Ok(rows)
}

/// Seed-averaged extremes over the alpha sweep for one
/// `(topology, pair_policy, k, mode)` group.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub topology: String,
    pub pair_policy: String,
    pub k: usize,
    pub mode: String,
    pub n_tot: usize,
    pub seeds: usize,
    pub alphas: usize,
    /// Largest seed-averaged `N_u / N_tot`, percent.
    pub n_u_max_pct: f64,
    pub alpha_at_n_u_max: f64,
    /// Smallest seed-averaged discovery rate, percent.
    pub r_min_pct: f64,
    pub alpha_at_r_min: f64,
}

pub const SUMMARY_HEADER: [&str; 11] = [
    "topology",
    "pair_policy",
    "k",
    "mode",
    "N_tot",
    "seeds",
    "alphas",
    "N_u_max_pct",
    "alpha_at_N_u_max",
    "R_min_pct",
    "alpha_at_R_min",
];

/// Averages each alpha over its seeds, then takes the maximum uncertain share
/// and the minimum discovery rate across alphas.
pub fn summarize(rows: &[ResultRow]) -> Vec<SummaryRow> {
    type Key = (String, String, usize, Mode);
    // alpha keyed by bit pattern; all alphas here are positive, so bits order like values
    let mut groups: BTreeMap<Key, BTreeMap<u64, Vec<&ResultRow>>> = BTreeMap::new();
    for r in rows {
        groups
            .entry((r.topology.clone(), r.pair_policy.clone(), r.k, r.mode))
            .or_default()
            .entry(r.alpha.to_bits())
            .or_default()
            .push(r);
    }
    groups
        .into_iter()
        .map(|((topology, pair_policy, k, mode), by_alpha)| {
            let mut s = SummaryRow {
                topology,
                pair_policy,
                k,
                mode: mode.label().into(),
                n_tot: 0,
                seeds: 0,
                alphas: by_alpha.len(),
                n_u_max_pct: f64::NEG_INFINITY,
                alpha_at_n_u_max: f64::NAN,
                r_min_pct: f64::INFINITY,
                alpha_at_r_min: f64::NAN,
            };
            for (bits, cell) in by_alpha {
                let alpha = f64::from_bits(bits);
                let m = cell.len() as f64;
                let nu = 100.0 * cell.iter().map(|r| r.counts.n_u as f64 / r.counts.n_tot as f64).sum::<f64>() / m;
                let rr = 100.0 * cell.iter().map(|r| r.counts.discovery_rate()).sum::<f64>() / m;
                s.n_tot = s.n_tot.max(cell.iter().map(|r| r.counts.n_tot).max().unwrap_or(0));
                s.seeds = s.seeds.max(cell.len());
                if nu > s.n_u_max_pct {
                    s.n_u_max_pct = nu;
                    s.alpha_at_n_u_max = alpha;
                }
                if rr < s.r_min_pct {
                    s.r_min_pct = rr;
                    s.alpha_at_r_min = alpha;
                }
            }
            s
        })
        .collect()
}

pub fn write_summary(rows: &[SummaryRow], writer: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(SUMMARY_HEADER)?;
    for s in rows {
        w.write_record([
            s.topology.clone(),
            s.pair_policy.clone(),
            s.k.to_string(),
            s.mode.clone(),
            s.n_tot.to_string(),
            s.seeds.to_string(),
            s.alphas.to_string(),
            fmt_float(s.n_u_max_pct),
            fmt_float(s.alpha_at_n_u_max),
            fmt_float(s.r_min_pct),
            fmt_float(s.alpha_at_r_min),
        ])?;
    }
    w.flush()?;
    Ok(())
}
