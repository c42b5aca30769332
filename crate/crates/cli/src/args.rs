//! Command-line arguments. Every command struct is also the resolved
//! configuration embedded in its outputs, so it round-trips through serde.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use smallworld::census::{FiniteModel, RootSample};
use smallworld::functionals::EdgeFilter;
use smallworld::marked_graph::{BallKind, MarkMode};

use crate::error::CliError;

#[derive(Parser, Debug)]
#[command(name = "smallworld", version, about = "Small-world graphs, their local limits and local functionals")]
pub struct Cli {
    /// Worker threads (default: all available cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Print per-stage wall times to stderr.
    #[arg(long, global = true)]
    pub timings: bool,
    /// Rerun the configuration embedded in an output file.
    #[arg(long, value_name = "FILE")]
    pub replay: Option<PathBuf>,
    /// Output path for a replayed run (default: the path recorded in the file).
    #[arg(long, value_name = "PATH", requires = "replay")]
    pub replay_out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Option<Command>,
}

#[derive(Subcommand, Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Command {
    /// Sample a finite graph and write it as line-delimited JSON.
    Generate(GenerateArgs),
    /// Census of rooted neighbourhoods of a finite graph or a limit sampler.
    Census(CensusArgs),
    /// TV distance between two census files, or a finite-vs-limit sweep over n.
    Compare(CompareArgs),
    /// Local functionals and their limit values.
    #[command(subcommand)]
    Functionals(Functional),
}

#[derive(Subcommand, Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "functional", rename_all = "kebab-case")]
pub enum Functional {
    /// Global and local clustering next to the limit value.
    Clustering(ClusteringArgs),
    /// Full PageRank, optionally against its ball-local approximation.
    Pagerank(PagerankArgs),
    /// Greedy routing delivery times over an (n, ell) grid.
    RouteSweep(RouteSweepArgs),
    /// Giant component after percolation and its local survival estimate.
    Percolation(PercolationArgs),
    /// Empirical law of Kleinberg shortcut lengths and the tail checks.
    ShortcutStats(ShortcutArgs),
    /// Degree histogram under an edge filter, with a Poisson fit.
    DegreeCensus(DegreeArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Ws,
    Kleinberg,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MarkModeArg {
    Ignore,
    Recentered,
    Absolute,
}

impl From<MarkModeArg> for MarkMode {
    fn from(m: MarkModeArg) -> Self {
        match m {
            MarkModeArg::Ignore => MarkMode::Ignore,
            MarkModeArg::Recentered => MarkMode::Recentered,
            MarkModeArg::Absolute => MarkMode::Absolute,
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BallKindArg {
    Graph,
    Lattice,
}

impl From<BallKindArg> for BallKind {
    fn from(b: BallKindArg) -> Self {
        match b {
            BallKindArg::Graph => BallKind::GraphBall,
            BallKindArg::Lattice => BallKind::LatticeBall,
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

/// Model family and parameters; `n` is given separately.
#[derive(Args, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelArgs {
    #[arg(long, value_enum)]
    pub model: Option<ModelKind>,
    /// Ring neighbours per side (WS) or lattice range (Kleinberg).
    #[arg(long, default_value_t = 1)]
    pub k: usize,
    /// WS rewiring probability.
    #[arg(long)]
    pub phi: Option<f64>,
    /// Kleinberg shortcuts per node.
    #[arg(long, default_value_t = 1)]
    pub q: usize,
    /// Kleinberg decay exponent.
    #[arg(long)]
    pub ell: Option<f64>,
}

impl ModelArgs {
    pub fn resolve(&self) -> Result<FiniteModel, CliError> {
        match self.model {
            Some(ModelKind::Ws) => {
                let phi = self.phi.ok_or_else(|| CliError::usage("--model ws needs --phi"))?;
                Ok(FiniteModel::Ws { k: self.k, phi })
            }
            Some(ModelKind::Kleinberg) => {
                let ell = self.ell.ok_or_else(|| CliError::usage("--model kleinberg needs --ell"))?;
                Ok(FiniteModel::Kleinberg { q: self.q, k: self.k, ell })
            }
            None => Err(CliError::usage("--model is required")),
        }
    }
}

/// A graph read from disk, or generated from model flags.
#[derive(Args, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphSource {
    /// Graph file written by `generate`.
    #[arg(long, value_name = "FILE", conflicts_with = "model")]
    pub graph: Option<PathBuf>,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Ring length (WS) or grid side (Kleinberg).
    #[arg(long)]
    pub n: Option<usize>,
}

#[derive(Args, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenerateArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output file (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CensusOptions {
    #[arg(long, default_value_t = 1)]
    pub radius: u32,
    /// Mark bin width; 0 compares marks exactly.
    #[arg(long, default_value_t = 0.0)]
    pub epsilon: f64,
    /// Default: recentered for Kleinberg with ell < 2, otherwise ignore.
    #[arg(long, value_enum)]
    pub mark_mode: Option<MarkModeArg>,
    #[arg(long, value_enum, default_value_t = BallKindArg::Graph)]
    pub ball_kind: BallKindArg,
    /// `all`, or a number of uniformly drawn roots.
    #[arg(long, default_value = "all", value_parser = parse_roots)]
    pub roots: RootSample,
}

#[derive(Args, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CensusArgs {
    #[command(flatten)]
    pub source: GraphSource,
    /// Sample balls from the local limit of the model instead of a finite graph.
    #[arg(long, requires = "samples")]
    pub limit: bool,
    /// Number of limit balls.
    #[arg(long)]
    pub samples: Option<usize>,
    #[command(flatten)]
    pub census: CensusOptions,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompareArgs {
    /// Two census files to compare.
    #[arg(long, num_args = 2, value_names = ["A", "B"], conflicts_with_all = ["model", "ns"])]
    pub censuses: Option<Vec<PathBuf>>,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Increasing graph sizes for a finite-vs-limit sweep.
    #[arg(long, value_delimiter = ',')]
    pub ns: Option<Vec<usize>>,
    #[arg(long, default_value_t = 100_000)]
    pub limit_samples: usize,
    #[command(flatten)]
    pub census: CensusOptions,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum, default_value_t)]
    pub format: Format,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TableOutput {
    #[arg(long, value_enum, default_value_t)]
    pub format: Format,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusteringArgs {
    #[command(flatten)]
    pub source: GraphSource,
    /// Monte-Carlo marks for the Kleinberg limit value.
    #[arg(long, default_value_t = 200)]
    pub mc_samples: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub output: TableOutput,
}

#[derive(Args, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PagerankArgs {
    #[command(flatten)]
    pub source: GraphSource,
    #[arg(long, default_value_t = 0.85)]
    pub alpha: f64,
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    /// Compare against the ball-local value at this radius on sampled nodes.
    #[arg(long)]
    pub local_radius: Option<u32>,
    #[arg(long, default_value_t = 100)]
    pub sample_nodes: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub output: TableOutput,
}

#[derive(Args, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RouteSweepArgs {
    #[arg(long, value_delimiter = ',', default_value = "64,128,256,512")]
    pub ns: Vec<usize>,
    /// `start:stop:step` (inclusive) or a comma-separated list.
    #[arg(long, default_value = "0:4:0.5", value_parser = parse_grid)]
    pub ells: Grid,
    #[arg(long, default_value_t = 1)]
    pub q: usize,
    #[arg(long, default_value_t = 1)]
    pub k: usize,
    #[arg(long, default_value_t = 1000)]
    pub trials: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub output: TableOutput,
}

#[derive(Args, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PercolationArgs {
    #[command(flatten)]
    pub source: GraphSource,
    #[arg(long, value_delimiter = ',', default_value = "0.6,0.8")]
    pub ps: Vec<f64>,
    #[arg(long, default_value_t = 6)]
    pub radius: u32,
    /// Cluster size that counts as survival (default: depth only).
    #[arg(long)]
    pub size_threshold: Option<usize>,
    #[arg(long, default_value_t = 10_000)]
    pub samples: usize,
    /// Estimate survival from limit balls instead of roots of the graph.
    #[arg(long)]
    pub limit: bool,
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub output: TableOutput,
}

#[derive(Args, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShortcutArgs {
    #[command(flatten)]
    pub source: GraphSource,
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub output: TableOutput,
}

#[derive(Args, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DegreeArgs {
    #[command(flatten)]
    pub source: GraphSource,
    /// all, ring, lattice, shortcut, in-shortcut or out-shortcut.
    #[arg(long, default_value = "all")]
    pub filter: EdgeFilter,
    /// Poisson mean to fit (default: the empirical mean).
    #[arg(long)]
    pub poisson_lambda: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub output: TableOutput,
}

/// A list of real values, kept as written values for exact replay.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Grid(pub Vec<f64>);

fn parse_grid(s: &str) -> Result<Grid, String> {
    let num = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("bad number '{t}': {e}"));
    if let [a, b, step] = s.split(':').collect::<Vec<_>>()[..] {
        let (a, b, step) = (num(a)?, num(b)?, num(step)?);
        if step.is_nan() || step <= 0.0 || b < a {
            return Err("grid needs start <= stop and a positive step".into());
        }
        let count = ((b - a) / step + 1e-9).floor() as usize;
        // values are rounded to the step's decimal precision so 0.1 steps print cleanly
        return Ok(Grid((0..=count).map(|i| ((a + i as f64 * step) * 1e9).round() / 1e9).collect()));
    }
    s.split(',').map(num).collect::<Result<_, _>>().map(Grid)
}

fn parse_roots(s: &str) -> Result<RootSample, String> {
    if s == "all" {
        return Ok(RootSample::All);
    }
    match s.parse::<usize>() {
        Ok(m) if m > 0 => Ok(RootSample::Uniform(m)),
        _ => Err(format!("expected 'all' or a positive count, got '{s}'")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids() {
        assert_eq!(parse_grid("0:4:0.25").unwrap().0.len(), 17);
        assert_eq!(parse_grid("0:1:0.1").unwrap().0[3], 0.3);
        assert_eq!(parse_grid("1,2.5").unwrap().0, vec![1.0, 2.5]);
        assert!(parse_grid("2:1:0.5").is_err());
        assert!(parse_grid("x").is_err());
    }

    #[test]
    fn roots() {
        assert_eq!(parse_roots("all").unwrap(), RootSample::All);
        assert_eq!(parse_roots("12").unwrap(), RootSample::Uniform(12));
        assert!(parse_roots("0").is_err());
    }

    #[test]
    fn command_configs_round_trip() {
        let cli = Cli::try_parse_from(["smallworld", "functionals", "route-sweep", "--ells", "0:1:0.5", "--seed", "3"])
            .unwrap();
        let cmd = cli.command.unwrap();
        let text = serde_json::to_string(&cmd).unwrap();
        assert_eq!(serde_json::from_str::<Command>(&text).unwrap(), cmd);
    }
}
