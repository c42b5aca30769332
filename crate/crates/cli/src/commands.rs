//! Command implementations.

use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::Rng;
use serde_json::{json, Value};
use smallworld::census::{
    convergence_report, default_mark_mode, finite_census, limit_census, limit_params_for, tv_distance, CensusCache,
    CensusSpec, FiniteModel, NeighborhoodDistribution,
};
use smallworld::functionals::EdgeFilter;
use smallworld::functionals::{
    clustering, degree_census, delivery_time_sweep, giant_fraction, kleinberg_clustering_limit,
    local_survival_estimate, pagerank_full, pagerank_local, percolate, poisson_pmf, poisson_tv, shortcut_length_stats,
    sweep_minimizers, ws_clustering_limit, SurvivalSource,
};
use smallworld::limit_samplers::LimitSampler;
use smallworld::marked_graph::{Direction, MarkedGraph, ModelTag};
use smallworld::rng::KeyedRng;

use crate::args::*;
use crate::error::CliError;
use crate::graph_file::{read_graph, write_graph};
use crate::output::{config_value, sink, write_document, write_table, Table};

/// Word separating the node-sampling stream of `pagerank` from other streams.
const PAGERANK_NODES: u64 = 0x7061_6765;

/// Prints stage durations to stderr when enabled.
pub struct Timer {
    enabled: bool,
    start: Instant,
}

impl Timer {
    pub fn new(enabled: bool) -> Self {
        Self { enabled, start: Instant::now() }
    }

    pub fn lap(&mut self, stage: &str) {
        if self.enabled {
            eprintln!("[timing] {stage}: {:.3}s", self.start.elapsed().as_secs_f64());
        }
        self.start = Instant::now();
    }
}

fn fill_seed(seed: &mut Option<u64>) {
    if seed.is_none() {
        let fresh = rand::rng().random::<u64>();
        eprintln!("seed: {fresh}");
        *seed = Some(fresh);
    }
}

/// Replaces every unset seed with a fresh one, so the embedded configuration
/// reproduces the run.
pub fn resolve_seeds(cmd: &mut Command) {
    let seed = match cmd {
        Command::Generate(a) => &mut a.seed,
        Command::Census(a) => &mut a.seed,
        Command::Compare(a) => &mut a.seed,
        Command::Functionals(f) => match f {
            Functional::Clustering(a) => &mut a.seed,
            Functional::Pagerank(a) => &mut a.seed,
            Functional::RouteSweep(a) => &mut a.seed,
            Functional::Percolation(a) => &mut a.seed,
            Functional::ShortcutStats(a) => &mut a.seed,
            Functional::DegreeCensus(a) => &mut a.seed,
        },
    };
    fill_seed(seed);
}

pub fn set_out(cmd: &mut Command, path: PathBuf) {
    let out = match cmd {
        Command::Generate(a) => &mut a.out,
        Command::Census(a) => &mut a.out,
        Command::Compare(a) => &mut a.out,
        Command::Functionals(f) => match f {
            Functional::Clustering(a) => &mut a.output.out,
            Functional::Pagerank(a) => &mut a.output.out,
            Functional::RouteSweep(a) => &mut a.output.out,
            Functional::Percolation(a) => &mut a.output.out,
            Functional::ShortcutStats(a) => &mut a.output.out,
            Functional::DegreeCensus(a) => &mut a.output.out,
        },
    };
    *out = Some(path);
}

pub fn execute(cmd: &Command, timer: &mut Timer) -> Result<(), CliError> {
    match cmd {
        Command::Generate(a) => generate(cmd, a, timer),
        Command::Census(a) => census(cmd, a, timer),
        Command::Compare(a) => compare(cmd, a, timer),
        Command::Functionals(f) => {
            let (table, output) = match f {
                Functional::Clustering(a) => (clustering_table(a, timer)?, &a.output),
                Functional::Pagerank(a) => (pagerank_table(a, timer)?, &a.output),
                Functional::RouteSweep(a) => (route_table(a, timer)?, &a.output),
                Functional::Percolation(a) => (percolation_table(a, timer)?, &a.output),
                Functional::ShortcutStats(a) => (shortcut_table(a, timer)?, &a.output),
                Functional::DegreeCensus(a) => (degree_table(a, timer)?, &a.output),
            };
            write_table(&table, cmd, output.format, output.out.as_deref())?;
            report_summary(&table, output.out.as_deref());
            Ok(())
        }
    }
}

/// Summary line on stdout when the result went to a file, else on stderr.
fn report_summary(table: &Table, out: Option<&Path>) {
    let line = Value::Object(table.summary.clone()).to_string();
    if out.is_some() {
        println!("{line}");
    } else {
        eprintln!("{line}");
    }
}

fn seed(s: &Option<u64>) -> u64 {
    s.expect("seeds are resolved before execution")
}

fn finite_model_of(tag: &ModelTag) -> Result<FiniteModel, CliError> {
    match *tag {
        ModelTag::Ws { k, phi, .. } => Ok(FiniteModel::Ws { k, phi }),
        ModelTag::Kleinberg { q, k, ell, .. } => Ok(FiniteModel::Kleinberg { q, k, ell }),
        _ => Err(CliError::usage("the graph carries no model parameters")),
    }
}

fn load_graph(src: &GraphSource, seed: u64) -> Result<MarkedGraph, CliError> {
    if let Some(path) = &src.graph {
        let f = File::open(path).map_err(|e| CliError::io(format!("cannot read {}: {e}", path.display())))?;
        return read_graph(BufReader::new(f));
    }
    let model = src.model.resolve()?;
    let n = src.n.ok_or_else(|| CliError::usage("--n is required when generating a graph"))?;
    Ok(model.generate(n, seed)?)
}

fn census_spec(opts: &CensusOptions, model: Option<&FiniteModel>) -> CensusSpec {
    let mode = match (opts.mark_mode, model) {
        (Some(m), _) => m.into(),
        (None, Some(model)) => default_mark_mode(model),
        (None, None) => smallworld::marked_graph::MarkMode::Ignore,
    };
    CensusSpec { radius: opts.radius, epsilon: opts.epsilon, mark_mode: mode, ball_kind: opts.ball_kind.into() }
}

fn generate(cmd: &Command, a: &GenerateArgs, timer: &mut Timer) -> Result<(), CliError> {
    let g = a.model.resolve()?.generate(a.n, seed(&a.seed))?;
    timer.lap("generate");
    write_graph(&g, &config_value(cmd), sink(a.out.as_deref())?)?;
    timer.lap("write");
    let line = format!("nodes={} edges={} shortcuts={}", g.node_count(), g.edge_count(), g.shortcut_count());
    if a.out.is_some() {
        println!("{line}");
    } else {
        eprintln!("{line}");
    }
    Ok(())
}

fn census(cmd: &Command, a: &CensusArgs, timer: &mut Timer) -> Result<(), CliError> {
    let dist = if a.limit {
        if a.source.graph.is_some() {
            return Err(CliError::usage("--limit samples from model flags, not from a graph file"));
        }
        let model = a.source.model.resolve()?;
        let spec = census_spec(&a.census, Some(&model));
        let sampler = LimitSampler::new(&limit_params_for(&model)?)?;
        let samples = a.samples.ok_or_else(|| CliError::usage("--limit needs --samples"))?;
        limit_census(&sampler, &spec, samples, seed(&a.seed))?
    } else {
        let g = load_graph(&a.source, seed(&a.seed))?;
        timer.lap("graph");
        let model = finite_model_of(g.model()).ok();
        let spec = census_spec(&a.census, model.as_ref());
        finite_census(&g, &spec, a.census.roots, seed(&a.seed))?
    };
    timer.lap("census");
    write_document(&dist, cmd, a.out.as_deref())?;
    let line = format!("buckets={} samples={} mass={}", dist.buckets.len(), dist.total_samples, dist.total_mass());
    if a.out.is_some() {
        println!("{line}");
    } else {
        eprintln!("{line}");
    }
    Ok(())
}

fn compare(cmd: &Command, a: &CompareArgs, timer: &mut Timer) -> Result<(), CliError> {
    let table = if let Some(paths) = &a.censuses {
        let [pa, pb] = paths.as_slice() else {
            return Err(CliError::usage("--censuses takes exactly two files"));
        };
        let da: NeighborhoodDistribution = crate::output::read_document(pa)?;
        let db: NeighborhoodDistribution = crate::output::read_document(pb)?;
        if da.spec() != db.spec() {
            return Err(CliError::usage(format!("census parameters differ: {:?} vs {:?}", da.spec(), db.spec())));
        }
        let tv = tv_distance(&da, &db)?;
        let mut t = Table::new(&["a", "b", "tv"]);
        t.push(vec![json!(pa.display().to_string()), json!(pb.display().to_string()), json!(tv)]);
        t.note("tv", tv);
        t
    } else {
        let model = a.model.resolve()?;
        let ns = a.ns.as_ref().ok_or_else(|| CliError::usage("compare needs --censuses or --ns with model flags"))?;
        let spec = census_spec(&a.census, Some(&model));
        let cache = CensusCache::from_env();
        let report =
            convergence_report(model, spec, ns, a.census.roots, a.limit_samples, seed(&a.seed), cache.as_ref())?;
        let mut t = Table::new(&["n", "tv", "finite_samples", "limit_samples", "finite_buckets"]);
        for r in &report.rows {
            t.push(vec![
                json!(r.n),
                json!(r.tv),
                json!(r.finite_samples),
                json!(r.limit_samples),
                json!(r.finite_buckets),
            ]);
            timer.lap(&format!("n={}", r.n));
            if timer.enabled {
                eprintln!("[timing] census n={}: {:.3}s", r.n, r.wall_time_s);
            }
        }
        t.note("limit", report.limit);
        t.note("limit_buckets", report.limit_buckets);
        t.note("tv_decreasing", report.rows.windows(2).all(|w| w[1].tv < w[0].tv));
        t
    };
    write_table(&table, cmd, a.format, a.out.as_deref())?;
    report_summary(&table, a.out.as_deref());
    Ok(())
}

fn clustering_table(a: &ClusteringArgs, timer: &mut Timer) -> Result<Table, CliError> {
    let g = load_graph(&a.source, seed(&a.seed))?;
    timer.lap("graph");
    let c = clustering(&g);
    timer.lap("clustering");
    let mut t = Table::new(&["nodes", "global", "limit", "relative_gap", "mean_local", "triangles"]);
    let limit = match *g.model() {
        ModelTag::Ws { k, phi, .. } => Some(ws_clustering_limit(k, phi)?),
        ModelTag::Kleinberg { q, k, ell, .. } if ell < 2.0 => {
            let l = kleinberg_clustering_limit(q, k, ell, a.mc_samples, 1e-6, seed(&a.seed))?;
            t.note("limit_std_error", l.std_error);
            t.note("limit_pointwise_mean", l.pointwise_mean);
            Some(l.value)
        }
        _ => None,
    };
    timer.lap("limit");
    let gap = limit.filter(|&l| l > 0.0).map(|l| c.global_value / l - 1.0);
    t.push(vec![
        json!(g.node_count()),
        json!(c.global_value),
        json!(limit),
        json!(gap),
        json!(c.mean_local()),
        json!(c.triangle_total),
    ]);
    t.note("global", c.global_value);
    t.note("limit", limit);
    Ok(t)
}

fn pagerank_table(a: &PagerankArgs, timer: &mut Timer) -> Result<Table, CliError> {
    let g = load_graph(&a.source, seed(&a.seed))?;
    timer.lap("graph");
    let full = pagerank_full(&g, a.alpha, a.tol)?;
    timer.lap("pagerank");
    let Some(r) = a.local_radius else {
        let mut t = Table::new(&["node", "pagerank"]);
        for (v, p) in full.iter().enumerate() {
            t.push(vec![json!(v), json!(p)]);
        }
        t.note("sum", full.iter().sum::<f64>());
        return Ok(t);
    };
    let n = g.node_count();
    let mut rng = KeyedRng::stream(seed(&a.seed), &[PAGERANK_NODES]);
    let bound = a.alpha.powi(r as i32 + 1);
    let mut t = Table::new(&["node", "full", "local", "abs_error", "bound"]);
    let mut errors = Vec::new();
    for _ in 0..a.sample_nodes {
        let v = rng.random_range(0..n);
        let local = pagerank_local(&g, v, a.alpha, r)?;
        let err = (local - full[v]).abs();
        errors.push(err);
        t.push(vec![json!(v), json!(full[v]), json!(local), json!(err), json!(bound)]);
    }
    timer.lap("local");
    errors.sort_by(f64::total_cmp);
    t.note("radius", r);
    t.note("bound", bound);
    t.note("max_error", errors.last());
    t.note("median_error", errors.get(errors.len() / 2));
    t.note("bound_holds", errors.iter().all(|&e| e <= bound));
    Ok(t)
}

fn route_table(a: &RouteSweepArgs, timer: &mut Timer) -> Result<Table, CliError> {
    if a.ns.is_empty() || a.ells.0.is_empty() {
        return Err(CliError::usage("route-sweep needs nonempty --ns and --ells"));
    }
    let rows = delivery_time_sweep(&a.ns, &a.ells.0, a.q, a.k, a.trials, seed(&a.seed))?;
    timer.lap("sweep");
    let minimizers = sweep_minimizers(&rows);
    let mut t = Table::new(&["n", "ell", "trials", "mean_hops", "std_error", "minimizer"]);
    for r in &rows {
        let best = minimizers.iter().find(|m| m.0 == r.n).map(|m| m.1);
        t.push(vec![json!(r.n), json!(r.ell), json!(r.trials), json!(r.mean_hops), json!(r.std_error), json!(best)]);
    }
    t.note("minimizers", minimizers.iter().map(|(n, l)| json!({"n": n, "ell": l})).collect::<Vec<_>>());
    Ok(t)
}

fn percolation_table(a: &PercolationArgs, timer: &mut Timer) -> Result<Table, CliError> {
    let s = seed(&a.seed);
    let g = load_graph(&a.source, s)?;
    timer.lap("graph");
    let sampler =
        if a.limit { Some(LimitSampler::new(&limit_params_for(&finite_model_of(g.model())?)?)?) } else { None };
    let threshold = a.size_threshold.unwrap_or(usize::MAX);
    let mut t = Table::new(&["p", "giant_fraction", "local_estimate", "samples"]);
    for &p in &a.ps {
        let giant = giant_fraction(&percolate(&g, p, s)?);
        let source = match &sampler {
            Some(l) => SurvivalSource::Limit(l),
            None => SurvivalSource::Graph(&g),
        };
        let local = local_survival_estimate(source, p, a.radius, threshold, a.samples, s)?;
        t.push(vec![json!(p), json!(giant), json!(local), json!(a.samples)]);
        timer.lap(&format!("p={p}"));
    }
    t.note(
        "max_gap",
        t.rows.iter().map(|r| (r[1].as_f64().unwrap() - r[2].as_f64().unwrap()).abs()).fold(0.0, f64::max),
    );
    Ok(t)
}

fn shortcut_table(a: &ShortcutArgs, timer: &mut Timer) -> Result<Table, CliError> {
    let g = load_graph(&a.source, seed(&a.seed))?;
    timer.lap("graph");
    let stats = shortcut_length_stats(&g)?;
    let mut t = Table::new(&["length", "cdf"]);
    for (i, c) in stats.cdf.iter().enumerate() {
        t.push(vec![json!(i + 1), json!(c)]);
    }
    t.note("shortcuts", stats.shortcuts);
    t.note("tail_checks", &stats.tail_checks);
    t.note("log_checks", &stats.log_checks);
    Ok(t)
}

/// Poisson rate the model predicts for a filtered degree, if it predicts one.
fn implied_rate(tag: &ModelTag, filter: EdgeFilter) -> Option<f64> {
    if filter != EdgeFilter::shortcuts(Direction::Incoming) {
        return None;
    }
    match *tag {
        ModelTag::Ws { k, phi, .. } => Some(k as f64 * phi),
        ModelTag::Kleinberg { q, .. } => Some(q as f64),
        _ => None,
    }
}

fn degree_table(a: &DegreeArgs, timer: &mut Timer) -> Result<Table, CliError> {
    let g = load_graph(&a.source, seed(&a.seed))?;
    timer.lap("graph");
    let hist = degree_census(&g, a.filter);
    let total: u64 = hist.iter().sum();
    let mean = hist.iter().enumerate().map(|(d, &c)| d as f64 * c as f64).sum::<f64>() / total.max(1) as f64;
    let lambda = a.poisson_lambda.or_else(|| implied_rate(g.model(), a.filter)).unwrap_or(mean);
    let pmf = poisson_pmf(lambda, hist.len());
    let mut t = Table::new(&["degree", "count", "fraction", "poisson_pmf"]);
    for (d, &c) in hist.iter().enumerate() {
        t.push(vec![json!(d), json!(c), json!(c as f64 / total.max(1) as f64), json!(pmf[d])]);
    }
    t.note("filter", a.filter.to_string());
    t.note("mean", mean);
    t.note("poisson_lambda", lambda);
    t.note("poisson_tv", poisson_tv(&hist, lambda));
    Ok(t)
}
