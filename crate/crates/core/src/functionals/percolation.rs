use std::collections::VecDeque;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::limit_samplers::LimitSampler;
use crate::marked_graph::{MarkedGraph, RootedNeighborhood};
use crate::rng::{derive, domain, unit, KeyedRng};

fn check_p(p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(invalid(format!("retention probability must lie in [0, 1], got {p}")));
    }
    Ok(())
}

/// Uniform coin of edge `e`; the edge is kept when it falls below `p`.
/// The same coin serves every `p`, which couples the retained edge sets.
fn coin(seed: u64, e: usize) -> f64 {
    unit(derive(seed, &[domain::PERCOLATION, e as u64]))
}

/// Bond percolation: keeps each edge independently with probability `p`.
pub fn percolate(g: &MarkedGraph, p: f64, seed: u64) -> Result<MarkedGraph> {
    check_p(p)?;
    Ok(g.filter_edges(|i, _| coin(seed, i) < p))
}

fn find(parent: &mut [u32], mut v: u32) -> u32 {
    while parent[v as usize] != v {
        let up = parent[parent[v as usize] as usize];
        parent[v as usize] = up;
        v = up;
    }
    v
}

/// Size of the largest connected component over the node count.
pub fn giant_fraction(g: &MarkedGraph) -> f64 {
    let n = g.node_count();
    if n == 0 {
        return 0.0;
    }
    let mut parent: Vec<u32> = (0..n as u32).collect();
    let mut size = vec![1u32; n];
    for e in g.edges() {
        let (a, b) = (find(&mut parent, e.tail), find(&mut parent, e.head));
        if a != b {
            let (big, small) = if size[a as usize] >= size[b as usize] { (a, b) } else { (b, a) };
            parent[small as usize] = big;
            size[big as usize] += size[small as usize];
        }
    }
    *size.iter().max().expect("nonempty") as f64 / n as f64
}

/// Where [`local_survival_estimate`] draws its rooted samples from.
#[derive(Clone, Copy)]
pub enum SurvivalSource<'a> {
    /// Uniform roots of a finite graph, with the edge coins of [`percolate`].
    Graph(&'a MarkedGraph),
    /// Independent balls of a local-limit sampler, with per-ball coins.
    Limit(&'a LimitSampler),
}

/// Fraction of sampled roots whose percolated cluster survives: it contains a
/// node at percolated distance `r` from the root, or it reaches
/// `size_threshold` nodes within that distance.
///
/// For a finite graph the coins are those of `percolate(g, p, seed)`, so the
/// estimate and the giant fraction of that percolated graph share one sample.
pub fn local_survival_estimate(
    source: SurvivalSource<'_>,
    p: f64,
    r: u32,
    size_threshold: usize,
    samples: usize,
    seed: u64,
) -> Result<f64> {
    check_p(p)?;
    if r == 0 || size_threshold == 0 || samples == 0 {
        return Err(invalid("need r >= 1, size_threshold >= 1 and at least one sample"));
    }
    let survived: usize = match source {
        SurvivalSource::Graph(g) => {
            let n = g.node_count();
            if n == 0 {
                return Err(invalid("graph has no nodes"));
            }
            (0..samples)
                .into_par_iter()
                .filter(|&i| {
                    let root = KeyedRng::stream(seed, &[domain::SURVIVAL, i as u64]).random_range(0..n);
                    survives(root, r, size_threshold, |v, visit| {
                        for h in g.neighbors(v) {
                            if coin(seed, h.edge as usize) < p {
                                visit(h.neighbor as usize);
                            }
                        }
                    })
                })
                .count()
        }
        SurvivalSource::Limit(sampler) => (0..samples)
            .into_par_iter()
            .filter(|&i| {
                let ball_seed = derive(seed, &[domain::SURVIVAL, i as u64]);
                let ball = sampler.sample(r, ball_seed);
                let adj = percolated_adjacency(&ball, p, ball_seed);
                survives(0, r, size_threshold, |v, visit| adj[v].iter().for_each(|&u| visit(u)))
            })
            .count(),
    };
    Ok(survived as f64 / samples as f64)
}

fn percolated_adjacency(ball: &RootedNeighborhood, p: f64, seed: u64) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); ball.len()];
    for (i, e) in ball.edges.iter().enumerate() {
        if coin(seed, i) < p {
            adj[e.a as usize].push(e.b as usize);
            adj[e.b as usize].push(e.a as usize);
        }
    }
    adj
}

/// Breadth-first search from `root` to depth `r` over the kept edges.
fn survives(root: usize, r: u32, size_threshold: usize, mut kept: impl FnMut(usize, &mut dyn FnMut(usize))) -> bool {
    let mut depth = std::collections::HashMap::from([(root, 0u32)]);
    let mut queue = VecDeque::from([root]);
    while let Some(v) = queue.pop_front() {
        if depth.len() >= size_threshold {
            return true;
        }
        let d = depth[&v];
        if d == r {
            return true;
        }
        let mut found = Vec::new();
        kept(v, &mut |u| found.push(u));
        for u in found {
            depth.entry(u).or_insert_with(|| {
                queue.push_back(u);
                d + 1
            });
        }
    }
    depth.len() >= size_threshold
}

/// Giant fraction of a percolated graph next to its local estimate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PercolationEstimate {
    pub p: f64,
    pub giant_fraction: f64,
    pub local_estimate: f64,
    pub samples: usize,
}

impl PercolationEstimate {
    /// Both quantities on the same coins of `g`.
    pub fn measure(g: &MarkedGraph, p: f64, r: u32, size_threshold: usize, samples: usize, seed: u64) -> Result<Self> {
        let giant = giant_fraction(&percolate(g, p, seed)?);
        let local = local_survival_estimate(SurvivalSource::Graph(g), p, r, size_threshold, samples, seed)?;
        Ok(Self { p, giant_fraction: giant, local_estimate: local, samples })
    }
}
