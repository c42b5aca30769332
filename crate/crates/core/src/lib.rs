//! Small-world random graphs and their local limits.
//!
//! The crate builds finite Watts-Strogatz and Kleinberg graphs with exact
//! edge and node marks, samples rooted balls lazily from the corresponding
//! infinite limit objects, and measures how close the two are through a
//! census of rooted neighbourhoods. A set of local functionals (clustering,
//! degree laws, PageRank, greedy routing, percolation) comes with the limit
//! values they converge to.

// `!(x > 0.0)` is used deliberately so that NaN parameters are rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod census;
pub mod error;
pub mod functionals;
pub mod generators;
pub mod limit_samplers;
pub mod marked_graph;
pub mod rng;

pub use error::{Error, Result};
