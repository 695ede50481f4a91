use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use qrl_core::costs::{links_from_arc_pairs, CostModel};
use qrl_core::envelope::envelope_scan;
use qrl_core::harness::{read_results, run_experiment, summarize, write_results, write_summary, ExperimentConfig};
use qrl_core::montecarlo::{argmax, best_p_formula, montecarlo_sweep};
use qrl_core::optimize::{optimize_p, Objective, SearchStrategy, StrategyKind};
use qrl_core::report::fmt_float;
use qrl_core::routing::{adversarial_bound_report, adversarial_randomized_report, adversarial_sum_metric_report};
use qrl_core::topology::{gen_transmit_scheme, MouthVariant};
use qrl_core::{
    assign_costs, classify_probe, derive_constraints, normalize, Constraints, Counts, MixVector, MultiCostGraph,
    PairPolicy, PairSet, TopologySpec,
};
use serde_json::json;

/// Experiments configs above this many nodes need `--large`.
const DESK_NODE_LIMIT: usize = 400;

#[derive(Parser)]
#[command(name = "qrl", version, about = "Multi-constrained routing lab")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a topology as graph JSON (costs zero for grid, dual-home and mouth-like).
    Gen(GenArgs),
    /// Draw link costs from a cost model.
    Assign(AssignArgs),
    /// Classify pairs at one mix.
    Classify(ClassifyArgs),
    /// Search the mix and write the probe trace.
    Optimize(OptimizeArgs),
    /// Sample the composite distance of one pair over p.
    Envelope(EnvelopeArgs),
    /// Table-routing checks on the hub-and-spoke construction.
    Adversarial(AdversarialArgs),
    /// Estimate the success probability of parallel paths over a p grid.
    Montecarlo(MontecarloArgs),
    /// Run an experiment config and write result rows.
    Experiment(ExperimentArgs),
    /// Seed-averaged extremes of a results file.
    Summarize(SummarizeArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Family {
    Grid,
    DualHome,
    MouthLike,
    ThreePath,
    Transmit,
    Adversarial,
}

#[derive(Clone, Copy, ValueEnum)]
enum Policy {
    AllToAll,
    BorderToBorder,
    AllWithSelf,
}

impl From<Policy> for PairPolicy {
    fn from(p: Policy) -> Self {
        match p {
            Policy::AllToAll => PairPolicy::AllToAll,
            Policy::BorderToBorder => PairPolicy::BorderToBorder,
            Policy::AllWithSelf => PairPolicy::AllOrderedWithSelf,
        }
    }
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, value_enum)]
    family: Family,
    /// Number of cost dimensions.
    #[arg(long, default_value_t = 2)]
    k: usize,
    #[arg(long, default_value_t = 15)]
    rows: usize,
    #[arg(long, default_value_t = 15)]
    cols: usize,
    #[arg(long, default_value_t = 200)]
    total_nodes: usize,
    #[arg(long, default_value_t = 10)]
    core_pairs: usize,
    /// Wire both leaves of a mouth-like pair to both hubs.
    #[arg(long)]
    both_hubs: bool,
    #[arg(long, default_value_t = 10)]
    n_paths: usize,
    /// Leaves per group of the hub-and-spoke construction.
    #[arg(long, default_value_t = 2)]
    n: usize,
    #[arg(long)]
    duplicate_vertices: bool,
    #[arg(long)]
    out: PathBuf,
    /// Also write the pair set as CSV.
    #[arg(long)]
    pairs_out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "all-with-self")]
    pair_policy: Policy,
}

#[derive(Args)]
struct AssignArgs {
    #[arg(long)]
    graph: PathBuf,
    /// Cost model JSON; defaults to the latency / loss / jitter model.
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

/// How to turn raw costs into normalized ones.
#[derive(Args)]
struct ConstraintArgs {
    /// Constraints as alpha times the largest single-metric shortest-path cost over the pairs.
    #[arg(long, conflicts_with = "constraints")]
    alpha: Option<f64>,
    /// Explicit constraints, `;`-separated. Without either flag the graph is taken as normalized.
    #[arg(long)]
    constraints: Option<String>,
}

#[derive(Args)]
struct ClassifyArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long)]
    pairs: PathBuf,
    /// Mix `(p, 1 - p)` for two metrics.
    #[arg(long, conflicts_with = "mix")]
    p: Option<f64>,
    /// Full mix, `;`-separated.
    #[arg(long)]
    mix: Option<String>,
    #[command(flatten)]
    constraint: ConstraintArgs,
    /// Verdicts CSV.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Strategy {
    Grid,
    GoldenSection,
    Dichotomy,
    #[value(alias = "dichotomy-with-endpoints")]
    DichotomyEndpoints,
    MonotoneEqualizer,
}

impl From<Strategy> for StrategyKind {
    fn from(s: Strategy) -> Self {
        match s {
            Strategy::Grid => StrategyKind::GridSearch,
            Strategy::GoldenSection => StrategyKind::GoldenSection,
            Strategy::Dichotomy => StrategyKind::Dichotomy,
            Strategy::DichotomyEndpoints => StrategyKind::DichotomyWithEndpoints,
            Strategy::MonotoneEqualizer => StrategyKind::MonotoneEqualizer,
        }
    }
}

#[derive(Args)]
struct OptimizeArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long)]
    pairs: PathBuf,
    #[arg(long, value_enum, default_value = "dichotomy-endpoints")]
    strategy: Strategy,
    #[arg(long, default_value_t = 10)]
    max_probes: usize,
    /// Stopping width for scalar searches, lattice step for grid search.
    #[arg(long, default_value_t = 1.0 / 64.0)]
    tolerance: f64,
    /// Rank single probes by fewest uncertain pairs instead of most satisfied.
    #[arg(long)]
    min_uncertain: bool,
    #[command(flatten)]
    constraint: ConstraintArgs,
    /// Trace CSV.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Accumulated verdicts CSV.
    #[arg(long)]
    verdicts_out: Option<PathBuf>,
}

#[derive(Args)]
struct EnvelopeArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long)]
    src: usize,
    #[arg(long)]
    dst: usize,
    #[arg(long, default_value_t = 101)]
    probes: usize,
    #[command(flatten)]
    constraint: ConstraintArgs,
    /// `p,g` CSV.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum AdversarialMode {
    BoundCheck,
    /// Shortest paths of `w1 + w2`, checked against twice each pair's slack.
    #[value(alias = "theorem2")]
    SumMetric,
    /// Randomized next-hop tables.
    #[value(alias = "theorem3")]
    Randomized,
}

#[derive(Args)]
struct AdversarialArgs {
    #[arg(long, default_value_t = 2)]
    k: usize,
    #[arg(long, default_value_t = 2)]
    n: usize,
    #[arg(long, value_enum, default_value = "bound-check")]
    mode: AdversarialMode,
    /// Randomized routing trials, or random tables when enumeration is too large.
    #[arg(long, default_value_t = 1000)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct MontecarloArgs {
    #[arg(long, default_value_t = 10)]
    n_paths: usize,
    #[arg(long)]
    c1: f64,
    #[arg(long)]
    c2: f64,
    /// Costs are uniform on `[lo, hi)` in both dimensions.
    #[arg(long, default_value_t = 0.0)]
    lo: f64,
    #[arg(long, default_value_t = 1.0)]
    hi: f64,
    #[arg(long, default_value_t = 100_000)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Number of evenly spaced p values.
    #[arg(long, default_value_t = 101)]
    grid: usize,
    /// `p,probability,stderr` CSV.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Allow topologies above the desk-scale node limit.
    #[arg(long)]
    large: bool,
}

#[derive(Args)]
struct SummarizeArgs {
    #[arg(long)]
    results: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Bad input discovered after parsing; exits like a clap error.
#[derive(Debug)]
struct UsageError(String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<UsageError>().is_some() {
                ExitCode::from(1)
            } else {
                ExitCode::from(2)
            }
        }
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Gen(a) => gen(a),
        Command::Assign(a) => assign(a),
        Command::Classify(a) => classify(a),
        Command::Optimize(a) => optimize(a),
        Command::Envelope(a) => envelope(a),
        Command::Adversarial(a) => adversarial(a),
        Command::Montecarlo(a) => montecarlo(a),
        Command::Experiment(a) => experiment(a),
        Command::Summarize(a) => summarize_cmd(a),
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?))
}

/// Writes to `path`, or stdout when absent.
fn with_output(path: Option<&Path>, f: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    match path {
        Some(p) => {
            let mut w = create(p)?;
            f(&mut w)?;
            w.flush()?;
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            f(&mut lock)?;
        }
    }
    Ok(())
}

fn read_graph(path: &Path) -> Result<MultiCostGraph> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    MultiCostGraph::from_json(&text).with_context(|| format!("parsing {}", path.display()))
}

fn read_pairs(path: &Path, graph: &MultiCostGraph) -> Result<PairSet> {
    let pairs = PairSet::read_csv(File::open(path).with_context(|| format!("reading {}", path.display()))?)?;
    pairs.check(graph)?;
    Ok(pairs)
}

fn parse_list(text: &str, what: &str) -> Result<Vec<f64>> {
    text.split(';').map(|s| s.trim().parse::<f64>().map_err(|_| usage(format!("bad {what} value `{s}`")))).collect()
}

fn prepare(graph: MultiCostGraph, pairs: &PairSet, c: &ConstraintArgs) -> Result<MultiCostGraph> {
    let constraints = match (c.alpha, &c.constraints) {
        (Some(alpha), _) => derive_constraints(&graph, pairs, alpha)?,
        (None, Some(list)) => Constraints::strict(parse_list(list, "constraint")?)?,
        (None, None) => return Ok(graph),
    };
    Ok(normalize(&graph, &constraints)?)
}

fn counts_json(c: &Counts) -> serde_json::Value {
    json!({ "N_tot": c.n_tot, "N_y": c.n_y, "N_n": c.n_n, "N_u": c.n_u, "R": c.discovery_rate() })
}

fn print_json(v: &serde_json::Value) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(v)?);
    Ok(())
}

fn gen(a: GenArgs) -> Result<()> {
    let spec = match a.family {
        Family::Grid => TopologySpec::Grid { rows: a.rows, cols: a.cols },
        Family::DualHome => TopologySpec::DualHome { total_nodes: a.total_nodes, core_pairs: a.core_pairs },
        Family::MouthLike => TopologySpec::MouthLike {
            total_nodes: a.total_nodes,
            core_pairs: a.core_pairs,
            variant: if a.both_hubs { MouthVariant::BothHubs } else { MouthVariant::Mouth },
        },
        Family::ThreePath => TopologySpec::ThreePath,
        Family::Transmit => TopologySpec::TransmitScheme { n_paths: a.n_paths, k: a.k },
        Family::Adversarial => TopologySpec::Adversarial { k: a.k, n: a.n, duplicate_vertices: a.duplicate_vertices },
    };
    let topo = spec.build(a.k).map_err(|e| usage(e.to_string()))?;
    fs::write(&a.out, topo.graph.to_json()?).with_context(|| format!("writing {}", a.out.display()))?;
    if let Some(p) = &a.pairs_out {
        let pairs = topo.pair_set(a.pair_policy.into()).map_err(|e| usage(e.to_string()))?;
        let mut w = create(p)?;
        pairs.write_csv(&mut w)?;
        w.flush()?;
    }
    print_json(&json!({
        "topology": spec.label(),
        "nodes": topo.graph.node_count(),
        "edges": topo.graph.edge_count(),
        "links": topo.links.len(),
    }))
}

fn assign(a: AssignArgs) -> Result<()> {
    let graph = read_graph(&a.graph)?;
    let model = match &a.model {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            let m: CostModel = serde_json::from_str(&text).with_context(|| format!("parsing {}", p.display()))?;
            m.with_seed(a.seed)
        }
        None => CostModel::latency_loss_jitter(graph.k(), a.seed)?,
    };
    let costed = assign_costs(&graph, &links_from_arc_pairs(&graph), &model)?;
    fs::write(&a.out, costed.to_json()?).with_context(|| format!("writing {}", a.out.display()))?;
    Ok(())
}

fn mix_from(p: Option<f64>, mix: &Option<String>, k: usize) -> Result<MixVector> {
    match (p, mix) {
        (Some(p), _) => Ok(MixVector::scalar(p)?),
        (None, Some(m)) => Ok(MixVector::new(parse_list(m, "mix")?)?),
        (None, None) if k == 2 => Ok(MixVector::scalar(0.5)?),
        (None, None) => Err(usage("--mix is required for more than two metrics")),
    }
}

fn classify(a: ClassifyArgs) -> Result<()> {
    let graph = read_graph(&a.graph)?;
    let pairs = read_pairs(&a.pairs, &graph)?;
    let graph = prepare(graph, &pairs, &a.constraint)?;
    let mix = mix_from(a.p, &a.mix, graph.k())?;
    let outcome = classify_probe(&graph, &pairs, &mix)?;
    if let Some(out) = &a.out {
        let mut w = create(out)?;
        qrl_core::classify::write_verdicts(&pairs, &outcome.verdicts, &mut w)?;
        w.flush()?;
    }
    print_json(&json!({
        "mix": mix.as_slice(),
        "counts": counts_json(&outcome.counts()),
        "pruned": outcome.pruned.by_constraint,
    }))
}

fn optimize(a: OptimizeArgs) -> Result<()> {
    let graph = read_graph(&a.graph)?;
    let pairs = read_pairs(&a.pairs, &graph)?;
    let graph = prepare(graph, &pairs, &a.constraint)?;
    let mut strategy = SearchStrategy::new(a.strategy.into()).with_max_probes(a.max_probes);
    strategy.tolerance = a.tolerance;
    if a.min_uncertain {
        strategy = strategy.with_objective(Objective::MinUncertain);
    }
    strategy.validate(graph.k()).map_err(|e| usage(e.to_string()))?;
    let trace = optimize_p(&graph, &pairs, &strategy)?;
    if let Some(out) = &a.out {
        let mut w = create(out)?;
        trace.write_csv(&mut w)?;
        w.flush()?;
    }
    if let Some(out) = &a.verdicts_out {
        let mut w = create(out)?;
        trace.ledger.write_csv(&pairs, &mut w)?;
        w.flush()?;
    }
    print_json(&json!({
        "best_mix": trace.best_mix.as_slice(),
        "probes": trace.probes.len(),
        "single": counts_json(&trace.best_single()),
        "multiple": counts_json(&trace.ledger.counts()),
    }))
}

fn envelope(a: EnvelopeArgs) -> Result<()> {
    let graph = read_graph(&a.graph)?;
    let pairs = PairSet::new(vec![(a.src, a.dst)]);
    pairs.check(&graph).map_err(|e| usage(e.to_string()))?;
    let graph = prepare(graph, &pairs, &a.constraint)?;
    let env = envelope_scan(&graph, a.src, a.dst, a.probes)?;
    if let Some(out) = &a.out {
        let mut w = create(out)?;
        writeln!(w, "p,g")?;
        for (p, g) in &env.samples {
            writeln!(w, "{},{}", fmt_float(*p), fmt_float(*g))?;
        }
        w.flush()?;
    }
    let (peak_p, peak_g) = env.peak();
    print_json(&json!({ "concave": env.concave, "peak_p": peak_p, "peak_g": peak_g }))
}

fn adversarial(a: AdversarialArgs) -> Result<()> {
    if a.k < 2 || a.n < 1 {
        return Err(usage("need --k >= 2 and --n >= 1"));
    }
    let report = match a.mode {
        AdversarialMode::BoundCheck => adversarial_bound_report(a.k, a.n, a.trials, a.seed)?,
        AdversarialMode::SumMetric => adversarial_sum_metric_report(a.k, a.n)?,
        AdversarialMode::Randomized => adversarial_randomized_report(a.k, a.n, a.trials, a.seed)?,
    };
    print_json(&serde_json::to_value(&report)?)
}

fn montecarlo(a: MontecarloArgs) -> Result<()> {
    if a.grid < 2 {
        return Err(usage("--grid needs at least 2 points"));
    }
    let scheme = gen_transmit_scheme(a.n_paths, 2).map_err(|e| usage(e.to_string()))?.graph;
    let model = CostModel::uniform(2, a.lo, a.hi, a.seed);
    let constraints = Constraints::strict(vec![a.c1, a.c2]).map_err(|e| usage(e.to_string()))?;
    let mixes =
        (0..a.grid).map(|i| MixVector::scalar(i as f64 / (a.grid - 1) as f64)).collect::<qrl_core::Result<Vec<_>>>()?;
    let est = montecarlo_sweep(&scheme, &model, &constraints, &mixes, a.samples)?;
    if let Some(out) = &a.out {
        let mut w = create(out)?;
        writeln!(w, "p,probability,stderr")?;
        for (m, e) in mixes.iter().zip(&est) {
            writeln!(w, "{},{},{}", fmt_float(m.p()), fmt_float(e.probability), fmt_float(e.stderr))?;
        }
        w.flush()?;
    }
    let best = argmax(&est).expect("non-empty grid");
    let formula = best_p_formula(a.lo, a.lo, a.c1, a.c2).ok();
    print_json(&json!({
        "argmax_p": mixes[best].p(),
        "max_probability": est[best].probability,
        "stderr": est[best].stderr,
        "formula_p": formula,
    }))
}

fn experiment(a: ExperimentArgs) -> Result<()> {
    let text = fs::read_to_string(&a.config).with_context(|| format!("reading {}", a.config.display()))?;
    let config = ExperimentConfig::from_json(&text).map_err(|e| usage(format!("{}: {e}", a.config.display())))?;
    let nodes = config.topology.build(config.k)?.graph.node_count();
    if nodes > DESK_NODE_LIMIT && !a.large {
        bail!(UsageError(format!("{nodes} nodes exceeds the desk-scale limit of {DESK_NODE_LIMIT}; pass --large")));
    }
    let rows = run_experiment(&config)?;
    let mut w = create(&a.out)?;
    write_results(&rows, &mut w)?;
    w.flush()?;
    eprintln!("wrote {} rows to {}", rows.len(), a.out.display());
    Ok(())
}

fn summarize_cmd(a: SummarizeArgs) -> Result<()> {
    let file = File::open(&a.results).with_context(|| format!("reading {}", a.results.display()))?;
    let rows = read_results(file)?;
    if rows.is_empty() {
        bail!("{} has no rows", a.results.display());
    }
    let summary = summarize(&rows);
    with_output(a.out.as_deref(), |w| Ok(write_summary(&summary, w)?))
}
