//! Per-pair verdicts under a probed mix and their accumulation across probes.
//!
//! Works on a normalized graph: every constraint is `< 1`. A probe computes
//! the composite-shortest path for each pair and decides:
//!
//! * composite distance `>= 1`: no path can be feasible under *any* mix,
//!   because a feasible path has every coordinate below 1 and therefore every
//!   convex combination of its coordinates below 1 as well;
//! * every coordinate `< 1`: the found path is feasible;
//! * otherwise the pair is uncertain at this mix.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{QrlError, Result};
use crate::graph::{MixVector, MultiCostGraph, NodeId};
use crate::spf::{spf_with_weights, EdgeWeights};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Verdict {
    Satisfied,
    NonSatisfied,
    Uncertain,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Satisfied => "satisfied",
            Verdict::NonSatisfied => "non-satisfied",
            Verdict::Uncertain => "uncertain",
        }
    }
}

/// Ordered source-destination pairs under study.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PairSet {
    pairs: Vec<(NodeId, NodeId)>,
}

#[derive(Serialize, Deserialize)]
struct PairRow {
    src: NodeId,
    dst: NodeId,
}

impl PairSet {
    pub fn new(pairs: Vec<(NodeId, NodeId)>) -> Self {
        PairSet { pairs }
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn pairs(&self) -> &[(NodeId, NodeId)] {
        &self.pairs
    }

    pub fn self_pairs(&self) -> usize {
        self.pairs.iter().filter(|(u, v)| u == v).count()
    }

    /// Pair indices grouped by source, sources ascending.
    pub fn by_source(&self) -> Vec<(NodeId, Vec<usize>)> {
        let mut groups: BTreeMap<NodeId, Vec<usize>> = BTreeMap::new();
        for (i, &(u, _)) in self.pairs.iter().enumerate() {
            groups.entry(u).or_default().push(i);
        }
        groups.into_iter().collect()
    }

    /// The pairs leaving `source`, in original order.
    pub fn from_source(&self, source: NodeId) -> PairSet {
        PairSet::new(self.pairs.iter().copied().filter(|(u, _)| *u == source).collect())
    }

    pub fn check(&self, graph: &MultiCostGraph) -> Result<()> {
        for &(u, v) in &self.pairs {
            graph.check_node(u)?;
            graph.check_node(v)?;
        }
        Ok(())
    }

    /// Reads a `src,dst` CSV with header.
    pub fn read_csv(reader: impl Read) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(reader);
        let pairs = rdr
            .deserialize::<PairRow>()
            .map(|r| r.map(|r| (r.src, r.dst)))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        Ok(PairSet::new(pairs))
    }

    pub fn write_csv(&self, writer: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        for &(src, dst) in &self.pairs {
            w.serialize(PairRow { src, dst })?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Number of uncertain pairs whose found path breaks each constraint.
///
/// A pair breaking several constraints is counted once per broken coordinate.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PruneCounters {
    pub by_constraint: Vec<u64>,
}

impl PruneCounters {
    pub fn new(k: usize) -> Self {
        PruneCounters { by_constraint: vec![0; k] }
    }
}

/// Verdicts of one probe, aligned with the pair set.
#[derive(Debug, Clone)]
pub struct ProbeOutcome {
    pub mix: MixVector,
    pub verdicts: Vec<Verdict>,
    pub pruned: PruneCounters,
}

impl ProbeOutcome {
    /// Counters of this probe taken on its own (the single-mix view).
    pub fn counts(&self) -> Counts {
        Counts::tally(&self.verdicts)
    }
}

/// `N_tot`, `N_y`, `N_n`, `N_u`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Counts {
    pub n_tot: usize,
    pub n_y: usize,
    pub n_n: usize,
    pub n_u: usize,
}

impl Counts {
    pub fn tally(verdicts: &[Verdict]) -> Self {
        let mut c = Counts { n_tot: verdicts.len(), ..Default::default() };
        for v in verdicts {
            match v {
                Verdict::Satisfied => c.n_y += 1,
                Verdict::NonSatisfied => c.n_n += 1,
                Verdict::Uncertain => c.n_u += 1,
            }
        }
        c
    }

    /// `N_y / (N_y + N_u)`; 1 when every pair is proven infeasible.
    pub fn discovery_rate(&self) -> f64 {
        let denom = self.n_y + self.n_u;
        if denom == 0 {
            1.0
        } else {
            self.n_y as f64 / denom as f64
        }
    }
}

/// Classifies every pair under a single mix on a normalized graph.
pub fn classify_probe(graph: &MultiCostGraph, pairs: &PairSet, mix: &MixVector) -> Result<ProbeOutcome> {
    pairs.check(graph)?;
    if graph.k() > 64 {
        return Err(QrlError::InvalidArgument(format!("k = {} exceeds 64 cost dimensions", graph.k())));
    }
    let weights = EdgeWeights::from_mix(graph, mix)?;
    let k = graph.k();
    let groups = pairs.by_source();

    let per_source = groups
        .par_iter()
        .map(|(source, idxs)| {
            let tree = spf_with_weights(graph, *source, &weights)?;
            Ok(idxs
                .iter()
                .map(|&i| {
                    let dst = pairs.pairs[i].1;
                    // unreachable: dist is infinite, hence >= 1
                    if tree.dist(dst) >= 1.0 {
                        return (i, Verdict::NonSatisfied, 0u64);
                    }
                    let cost = tree.cost(dst).expect("finite distance implies reachable");
                    let mut broken = 0u64;
                    for (j, c) in cost.iter().enumerate() {
                        if *c >= 1.0 {
                            broken |= 1 << j;
                        }
                    }
                    if broken == 0 {
                        (i, Verdict::Satisfied, 0)
                    } else {
                        (i, Verdict::Uncertain, broken)
                    }
                })
                .collect::<Vec<_>>())
        })
        .collect::<Result<Vec<_>>>()?;

    let mut verdicts = vec![Verdict::Uncertain; pairs.len()];
    let mut pruned = PruneCounters::new(k);
    for (i, v, broken) in per_source.into_iter().flatten() {
        verdicts[i] = v;
        for (j, slot) in pruned.by_constraint.iter_mut().enumerate() {
            if broken & (1 << j) != 0 {
                *slot += 1;
            }
        }
    }
    Ok(ProbeOutcome { mix: mix.clone(), verdicts, pruned })
}

/// Cumulative verdicts over a sequence of probes.
///
/// Proven verdicts are sticky: `Satisfied` and `NonSatisfied` replace
/// `Uncertain` and are never replaced themselves.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ledger {
    verdicts: Vec<Verdict>,
    counts: Counts,
}

impl Ledger {
    /// Every pair starts uncertain.
    pub fn new(n_tot: usize) -> Self {
        Ledger { verdicts: vec![Verdict::Uncertain; n_tot], counts: Counts { n_tot, n_u: n_tot, ..Default::default() } }
    }

    pub fn from_verdicts(verdicts: Vec<Verdict>) -> Self {
        let counts = Counts::tally(&verdicts);
        Ledger { verdicts, counts }
    }

    pub fn verdicts(&self) -> &[Verdict] {
        &self.verdicts
    }

    pub fn counts(&self) -> Counts {
        self.counts
    }

    pub fn discovery_rate(&self) -> f64 {
        self.counts.discovery_rate()
    }

    /// Folds one probe's verdicts in.
    ///
    /// # Panics
    ///
    /// If a pair is proven both satisfied and non-satisfied, which sound
    /// pruning rules out.
    pub fn merge(&mut self, verdicts: &[Verdict]) {
        assert_eq!(verdicts.len(), self.verdicts.len(), "probe does not cover the ledger's pair set");
        for (i, (slot, new)) in self.verdicts.iter_mut().zip(verdicts).enumerate() {
            match (*slot, *new) {
                (_, Verdict::Uncertain) => {}
                (Verdict::Uncertain, v) => *slot = v,
                (a, b) if a == b => {}
                (a, b) => panic!("pair #{i} proven both {} and {}", a.as_str(), b.as_str()),
            }
        }
        self.counts = Counts::tally(&self.verdicts);
    }

    /// Writes `src,dst,verdict` rows.
    pub fn write_csv(&self, pairs: &PairSet, writer: impl Write) -> Result<()> {
        write_verdicts(pairs, &self.verdicts, writer)
    }
}

pub fn merge_probe(mut ledger: Ledger, verdicts: &[Verdict]) -> Ledger {
    ledger.merge(verdicts);
    ledger
}

pub fn discovery_rate(ledger: &Ledger) -> f64 {
    ledger.discovery_rate()
}

pub fn write_verdicts(pairs: &PairSet, verdicts: &[Verdict], writer: impl Write) -> Result<()> {
    if pairs.len() != verdicts.len() {
        return Err(QrlError::InvalidArgument(format!("{} verdicts for {} pairs", verdicts.len(), pairs.len())));
    }
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["src", "dst", "verdict"])?;
    for (&(u, v), verdict) in pairs.pairs().iter().zip(verdicts) {
        w.write_record([u.to_string(), v.to_string(), verdict.as_str().to_string()])?;
    }
    w.flush()?;
    Ok(())
}
