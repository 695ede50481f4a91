//! Search for the mix that maximizes the number of satisfied pairs.
//!
//! Every probe classifies the whole pair set at one mix and is folded into a
//! cumulative [`Ledger`] (the multiple-mix view). The trace also remembers the
//! best single probe (the single-mix view).
//!
//! For two metrics the mix is the scalar `p` of `p * w1 + (1 - p) * w2`.
//! Raising `p` favours paths that are cheap in `w1`, so along the search the
//! found paths break constraint 1 less often and constraint 2 more often. The
//! dichotomy and equalizer strategies steer by that signal.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::classify::{classify_probe, Counts, Ledger, PairSet, ProbeOutcome, PruneCounters, Verdict};
use crate::error::{QrlError, Result};
use crate::graph::{MixVector, MultiCostGraph};
use crate::report::{fmt_float, fmt_mix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StrategyKind {
    /// Evenly spaced `p` (or a simplex lattice for more than two metrics).
    GridSearch,
    GoldenSection,
    /// Bisection steered by the equalizer signal, starting at `p = 1/2`.
    Dichotomy,
    /// Probes `p = 0` and `p = 1` first, then bisects like `Dichotomy`.
    #[serde(alias = "dichotomy-endpoints")]
    DichotomyWithEndpoints,
    /// Regula falsi on `pruned_1(p) - pruned_2(p)` after probing both ends.
    MonotoneEqualizer,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Objective {
    #[default]
    MaxSatisfied,
    MinUncertain,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchStrategy {
    pub kind: StrategyKind,
    #[serde(default = "default_max_probes")]
    pub max_probes: usize,
    /// Interval width at which scalar searches stop; lattice step for grid search.
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    #[serde(default)]
    pub objective: Objective,
}

fn default_max_probes() -> usize {
    10
}

fn default_tolerance() -> f64 {
    1.0 / 64.0
}

impl SearchStrategy {
    pub fn new(kind: StrategyKind) -> Self {
        SearchStrategy {
            kind,
            max_probes: default_max_probes(),
            tolerance: default_tolerance(),
            objective: Objective::default(),
        }
    }

    /// Grid search with `steps + 1` points per axis, budget sized to fit.
    pub fn grid(k: usize, steps: usize) -> Self {
        SearchStrategy {
            kind: StrategyKind::GridSearch,
            max_probes: lattice_size(k, steps),
            tolerance: 1.0 / steps as f64,
            objective: Objective::default(),
        }
    }

    pub fn with_max_probes(mut self, max_probes: usize) -> Self {
        self.max_probes = max_probes;
        self
    }

    pub fn with_objective(mut self, objective: Objective) -> Self {
        self.objective = objective;
        self
    }

    pub fn validate(&self, k: usize) -> Result<()> {
        if self.max_probes == 0 {
            return Err(QrlError::InvalidStrategy("max_probes must be at least 1".into()));
        }
        if !(self.tolerance > 0.0) || self.tolerance > 1.0 {
            return Err(QrlError::InvalidStrategy(format!("tolerance {} outside (0, 1]", self.tolerance)));
        }
        if self.kind != StrategyKind::GridSearch && k != 2 {
            return Err(QrlError::InvalidStrategy(format!("{:?} needs exactly two metrics, got {k}", self.kind)));
        }
        if self.kind == StrategyKind::GridSearch {
            let size = lattice_size(k, self.lattice_steps());
            if size > self.max_probes {
                return Err(QrlError::InvalidStrategy(format!(
                    "grid of {size} points exceeds the budget of {} probes",
                    self.max_probes
                )));
            }
        }
        Ok(())
    }

    fn lattice_steps(&self) -> usize {
        (1.0 / self.tolerance).round().max(1.0) as usize
    }
}

fn lattice_size(k: usize, steps: usize) -> usize {
    // C(steps + k - 1, k - 1)
    let mut c = 1usize;
    for i in 1..k {
        c = c * (steps + i) / i;
    }
    c
}

/// Points of the simplex lattice with spacing `1 / steps`, first coordinate
/// ascending (for two metrics: `p = 0, 1/steps, ..., 1`).
pub fn simplex_lattice(k: usize, steps: usize) -> Vec<MixVector> {
    fn rec(k: usize, left: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if k == 1 {
            prefix.push(left);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for i in 0..=left {
            prefix.push(i);
            rec(k - 1, left - i, prefix, out);
            prefix.pop();
        }
    }
    let mut points = Vec::new();
    rec(k, steps, &mut Vec::new(), &mut points);
    points
        .into_iter()
        .map(|pt| {
            let mut p: Vec<f64> = pt.iter().map(|&i| i as f64 / steps as f64).collect();
            // absorb rounding so the coordinates sum to exactly 1
            let head: f64 = p[..k - 1].iter().sum();
            p[k - 1] = 1.0 - head;
            MixVector::new(p).expect("lattice points lie on the simplex")
        })
        .collect()
}

/// Which way to move `p`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Increase,
    Decrease,
    Stop,
}

/// More pairs pruned by constraint 1 means `w1` deserves more weight: raise
/// `p`. The converse lowers it; a balance stops the search.
pub fn equalizer_signal(counters: &PruneCounters) -> Result<Direction> {
    match counters.by_constraint.as_slice() {
        [first, second] => Ok(match first.cmp(second) {
            std::cmp::Ordering::Greater => Direction::Increase,
            std::cmp::Ordering::Less => Direction::Decrease,
            std::cmp::Ordering::Equal => Direction::Stop,
        }),
        other => Err(QrlError::DimensionMismatch { expected: 2, got: other.len() }),
    }
}

/// One probe as recorded in the trace.
#[derive(Debug, Clone)]
pub struct ProbeRecord {
    pub mix: MixVector,
    /// This probe alone.
    pub single: Counts,
    /// The ledger after merging this probe.
    pub cumulative: Counts,
    pub pruned: PruneCounters,
}

#[derive(Debug, Clone)]
pub struct SearchTrace {
    pub probes: Vec<ProbeRecord>,
    pub best_mix: MixVector,
    best_index: usize,
    best_verdicts: Vec<Verdict>,
    pub ledger: Ledger,
}

impl SearchTrace {
    pub fn best_index(&self) -> usize {
        self.best_index
    }

    /// Counters of the best single probe.
    pub fn best_single(&self) -> Counts {
        self.probes[self.best_index].single
    }

    /// Verdicts of the best single probe.
    pub fn best_verdicts(&self) -> &[Verdict] {
        &self.best_verdicts
    }

    /// Writes `probe_idx,p,N_y,N_n,N_u,pruned_1,...,pruned_k`, counters cumulative.
    pub fn write_csv(&self, writer: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let k = self.best_mix.dim();
        let mut header = vec!["probe_idx".to_string(), "p".into(), "N_y".into(), "N_n".into(), "N_u".into()];
        header.extend((1..=k).map(|i| format!("pruned_{i}")));
        w.write_record(&header)?;
        for (i, r) in self.probes.iter().enumerate() {
            let p = if k == 2 { fmt_float(r.mix.p()) } else { fmt_mix(r.mix.as_slice()) };
            let mut row = vec![
                i.to_string(),
                p,
                r.cumulative.n_y.to_string(),
                r.cumulative.n_n.to_string(),
                r.cumulative.n_u.to_string(),
            ];
            row.extend(r.pruned.by_constraint.iter().map(|c| c.to_string()));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Probe bookkeeping shared by all strategies.
struct Prober<'a> {
    graph: &'a MultiCostGraph,
    pairs: &'a PairSet,
    objective: Objective,
    budget: usize,
    ledger: Ledger,
    probes: Vec<ProbeRecord>,
    best: Option<(usize, Vec<Verdict>)>,
}

impl<'a> Prober<'a> {
    fn exhausted(&self) -> bool {
        self.probes.len() >= self.budget
    }

    fn score(&self, c: &Counts) -> i64 {
        match self.objective {
            Objective::MaxSatisfied => c.n_y as i64,
            Objective::MinUncertain => -(c.n_u as i64),
        }
    }

    /// Probes `mix`, returning the single-probe outcome.
    fn probe(&mut self, mix: MixVector) -> Result<ProbeOutcome> {
        let out = classify_probe(self.graph, self.pairs, &mix)?;
        self.ledger.merge(&out.verdicts);
        let single = out.counts();
        let record = ProbeRecord { mix, single, cumulative: self.ledger.counts(), pruned: out.pruned.clone() };
        let idx = self.probes.len();
        let better = match &self.best {
            None => true,
            Some((b, _)) => {
                let (cur, prev) = (self.score(&single), self.score(&self.probes[*b].single));
                // ties go to the smaller p
                cur > prev || (cur == prev && record.mix.p() < self.probes[*b].mix.p())
            }
        };
        self.probes.push(record);
        if better {
            self.best = Some((idx, out.verdicts.clone()));
        }
        Ok(out)
    }

    fn scalar(&mut self, p: f64) -> Result<ProbeOutcome> {
        self.probe(MixVector::scalar(p.clamp(0.0, 1.0))?)
    }

    fn finish(self) -> SearchTrace {
        let (best_index, best_verdicts) = self.best.expect("at least one probe");
        SearchTrace {
            best_mix: self.probes[best_index].mix.clone(),
            best_index,
            best_verdicts,
            probes: self.probes,
            ledger: self.ledger,
        }
    }
}

/// Runs `strategy` over `pairs` on a normalized graph.
pub fn optimize_p(graph: &MultiCostGraph, pairs: &PairSet, strategy: &SearchStrategy) -> Result<SearchTrace> {
    if pairs.is_empty() {
        return Err(QrlError::EmptyPairSet);
    }
    strategy.validate(graph.k())?;
    let mut pr = Prober {
        graph,
        pairs,
        objective: strategy.objective,
        budget: strategy.max_probes,
        ledger: Ledger::new(pairs.len()),
        probes: Vec::new(),
        best: None,
    };
    match strategy.kind {
        StrategyKind::GridSearch => {
            for mix in simplex_lattice(graph.k(), strategy.lattice_steps()) {
                pr.probe(mix)?;
            }
        }
        StrategyKind::Dichotomy => bisect(&mut pr, strategy.tolerance)?,
        StrategyKind::DichotomyWithEndpoints => {
            pr.scalar(0.0)?;
            if !pr.exhausted() {
                pr.scalar(1.0)?;
            }
            bisect(&mut pr, strategy.tolerance)?;
        }
        StrategyKind::GoldenSection => golden(&mut pr, strategy.tolerance)?,
        StrategyKind::MonotoneEqualizer => regula_falsi(&mut pr, strategy.tolerance)?,
    }
    Ok(pr.finish())
}

fn bisect(pr: &mut Prober<'_>, tolerance: f64) -> Result<()> {
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    while !pr.exhausted() && hi - lo >= tolerance {
        let mid = 0.5 * (lo + hi);
        let out = pr.scalar(mid)?;
        match equalizer_signal(&out.pruned)? {
            Direction::Increase => lo = mid,
            Direction::Decrease => hi = mid,
            Direction::Stop => break,
        }
    }
    Ok(())
}

fn golden(pr: &mut Prober<'_>, tolerance: f64) -> Result<()> {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (0.0f64, 1.0f64);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let o = pr.scalar(c)?;
    let mut fc = pr.score(&o.counts());
    if pr.exhausted() {
        return Ok(());
    }
    let o = pr.scalar(d)?;
    let mut fd = pr.score(&o.counts());
    while !pr.exhausted() && b - a >= tolerance {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            let o = pr.scalar(c)?;
            fc = pr.score(&o.counts());
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            let o = pr.scalar(d)?;
            fd = pr.score(&o.counts());
        }
    }
    Ok(())
}

fn imbalance(out: &ProbeOutcome) -> f64 {
    let c = &out.pruned.by_constraint;
    c[0] as f64 - c[1] as f64
}

fn regula_falsi(pr: &mut Prober<'_>, tolerance: f64) -> Result<()> {
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let mut f_lo = imbalance(&pr.scalar(lo)?);
    if pr.exhausted() {
        return Ok(());
    }
    let mut f_hi = imbalance(&pr.scalar(hi)?);
    // the imbalance falls with p; without a sign change the balance point is an endpoint
    if f_lo <= 0.0 || f_hi >= 0.0 {
        return Ok(());
    }
    let mut last_side = 0i8;
    while !pr.exhausted() && hi - lo >= tolerance {
        let guess = lo + (hi - lo) * f_lo / (f_lo - f_hi);
        // keep the probe strictly inside the bracket
        let margin = 0.05 * (hi - lo);
        let p = guess.clamp(lo + margin, hi - margin);
        let f = imbalance(&pr.scalar(p)?);
        if f == 0.0 {
            break;
        }
        if f > 0.0 {
            lo = p;
            f_lo = f;
            if last_side == 1 {
                f_hi *= 0.5;
            }
            last_side = 1;
        } else {
            hi = p;
            f_hi = f;
            if last_side == -1 {
                f_lo *= 0.5;
            }
            last_side = -1;
        }
    }
    Ok(())
}

/// Pairs leaving the lowest-numbered source: the deterministic "special node"
/// every router can agree on without exchanging messages.
pub fn special_node_pairs(pairs: &PairSet) -> Result<PairSet> {
    let source = pairs.pairs().iter().map(|(u, _)| *u).min().ok_or(QrlError::EmptyPairSet)?;
    Ok(pairs.from_source(source))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::gen_three_path;

    #[test]
    fn equalizer_directions() {
        let sig = |a, b| equalizer_signal(&PruneCounters { by_constraint: vec![a, b] }).unwrap();
        assert_eq!(sig(10, 2), Direction::Increase);
        assert_eq!(sig(5, 5), Direction::Stop);
        assert_eq!(sig(0, 7), Direction::Decrease);
        assert!(equalizer_signal(&PruneCounters::new(3)).is_err());
    }

    #[test]
    fn lattice_points() {
        let l = simplex_lattice(2, 4);
        let ps: Vec<f64> = l.iter().map(|m| m.p()).collect();
        assert_eq!(ps, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(simplex_lattice(3, 10).len(), 66);
        assert_eq!(lattice_size(3, 10), 66);
        assert_eq!(lattice_size(2, 100), 101);
    }

    #[test]
    fn three_path_never_satisfied() {
        let t = gen_three_path().unwrap();
        let pairs = PairSet::new(vec![(0, 1)]);
        for kind in [
            StrategyKind::Dichotomy,
            StrategyKind::DichotomyWithEndpoints,
            StrategyKind::GoldenSection,
            StrategyKind::MonotoneEqualizer,
        ] {
            let trace = optimize_p(&t.graph, &pairs, &SearchStrategy::new(kind)).unwrap();
            assert!(trace.probes.iter().all(|r| r.single.n_y == 0), "{kind:?}");
            assert_eq!(trace.ledger.counts().n_u, 1);
            assert!(trace.probes.len() <= 10);
        }
        let trace = optimize_p(&t.graph, &pairs, &SearchStrategy::grid(2, 100)).unwrap();
        assert_eq!(trace.probes.len(), 101);
        assert_eq!(trace.ledger.counts().n_y, 0);
    }

    #[test]
    fn symmetric_two_path_stays_uncertain() {
        // every probe finds a path with one coordinate equal to 1
        let g = MultiCostGraph::from_arcs(2, 2, vec![(0, 1, vec![1.0, 0.0]), (0, 1, vec![0.0, 1.0])]).unwrap();
        let pairs = PairSet::new(vec![(0, 1)]);
        let trace = optimize_p(&g, &pairs, &SearchStrategy::new(StrategyKind::DichotomyWithEndpoints)).unwrap();
        assert_eq!(trace.ledger.counts().n_u, 1);
        // p = 1/2: both composite 0.5, lowest edge id (1, 0) is taken
        let half = trace.probes.iter().find(|r| r.mix.p() == 0.5).unwrap();
        assert_eq!(half.pruned.by_constraint, vec![1, 0]);
    }

    #[test]
    fn dichotomy_schedule() {
        let t = gen_three_path().unwrap();
        let pairs = PairSet::new(vec![(0, 1)]);
        let trace = optimize_p(&t.graph, &pairs, &SearchStrategy::new(StrategyKind::DichotomyWithEndpoints)).unwrap();
        let ps: Vec<f64> = trace.probes.iter().map(|r| r.mix.p()).collect();
        assert_eq!(&ps[..3], &[0.0, 1.0, 0.5]);
        assert!(ps[3] == 0.25 || ps[3] == 0.75);
    }

    #[test]
    fn empty_pairs_and_bad_strategies() {
        let t = gen_three_path().unwrap();
        let s = SearchStrategy::new(StrategyKind::Dichotomy);
        assert!(matches!(optimize_p(&t.graph, &PairSet::default(), &s), Err(QrlError::EmptyPairSet)));
        let s = SearchStrategy::new(StrategyKind::GridSearch); // 65 points, budget 10
        assert!(optimize_p(&t.graph, &PairSet::new(vec![(0, 1)]), &s).is_err());
        let s = SearchStrategy::new(StrategyKind::Dichotomy).with_max_probes(0);
        assert!(s.validate(2).is_err());
        assert!(SearchStrategy::new(StrategyKind::GoldenSection).validate(3).is_err());
    }

    #[test]
    fn trace_csv_header() {
        let t = gen_three_path().unwrap();
        let trace =
            optimize_p(&t.graph, &PairSet::new(vec![(0, 1)]), &SearchStrategy::new(StrategyKind::Dichotomy)).unwrap();
        let mut buf = Vec::new();
        trace.write_csv(&mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert!(s.starts_with("probe_idx,p,N_y,N_n,N_u,pruned_1,pruned_2\n0,0.500000000,0,0,1,0,1\n"), "{s}");
    }
}
