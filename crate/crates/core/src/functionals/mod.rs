//! Local functionals of small-world graphs and their limit values.

mod clustering;
mod degrees;
mod pagerank;
mod percolation;
mod routing;

pub use clustering::{
    clustering, kleinberg_clustering_limit, triangle_count_lattice, triangle_count_lattice_window, ws_clustering_limit,
    ClusteringLimit, ClusteringResult,
};
pub use degrees::{
    degree_census, poisson_pmf, poisson_tv, shortcut_length_stats, EdgeFilter, LengthTailCheck, LogScaleCheck,
    ShortcutLengthStats,
};
pub use pagerank::{pagerank_full, pagerank_local};
pub use percolation::{giant_fraction, local_survival_estimate, percolate, PercolationEstimate, SurvivalSource};
pub use routing::{delivery_time_sweep, greedy_route, sweep_minimizers, RouteResult, SweepRow};
