use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::marked_graph::{Edge, EdgeKind, MarkedGraph, ModelTag, NodeMark};
use crate::rng::{domain, KeyedRng};

/// Parameters of a Watts-Strogatz graph on `n` ring nodes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WsParams {
    pub n: usize,
    /// Ring edges per side.
    pub k: usize,
    /// Rewiring probability.
    pub phi: f64,
    pub seed: u64,
}

impl WsParams {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 || self.k > u16::MAX as usize {
            return Err(invalid(format!("k must lie in 1..=65535, got {}", self.k)));
        }
        if self.n < 2 * self.k + 1 || self.n > u32::MAX as usize {
            return Err(invalid(format!("n must be at least 2k+1 = {}, got {}", 2 * self.k + 1, self.n)));
        }
        if !(0.0..=1.0).contains(&self.phi) {
            return Err(invalid(format!("phi must lie in [0, 1], got {}", self.phi)));
        }
        Ok(())
    }
}

/// Samples WS(n, phi, k).
///
/// Node `i` owns the `k` clockwise ring edges `i -> i+d`, `d = 1..=k`. Each
/// one independently keeps its tail and, with probability `phi`, moves its
/// head to a uniform node other than `i`; a moved edge becomes a shortcut and
/// keeps `d` as its ring distance. Parallel edges may appear.
pub fn generate_ws(p: &WsParams) -> Result<MarkedGraph> {
    p.validate()?;
    let (n, k) = (p.n, p.k);
    let blank = Edge { tail: 0, head: 0, kind: EdgeKind::Ring, ring_distance: None };
    let mut edges = vec![blank; n * k];
    edges.par_chunks_mut(k).enumerate().for_each(|(i, slots)| {
        let mut rng = KeyedRng::stream(p.seed, &[domain::WS_REWIRE, i as u64]);
        for (slot, d) in slots.iter_mut().zip(1..=k) {
            let rewire = rng.random::<f64>() < p.phi;
            let (head, kind) = if rewire {
                let t = rng.random_range(0..n - 1);
                (if t >= i { t + 1 } else { t }, EdgeKind::Shortcut)
            } else {
                ((i + d) % n, EdgeKind::Ring)
            };
            *slot = Edge { tail: i as u32, head: head as u32, kind, ring_distance: Some(d as u16) };
        }
    });
    let marks = (0..n).map(|i| NodeMark::RingIndex { index: i as u32 }).collect();
    MarkedGraph::from_edges(ModelTag::Ws { n, k, phi: p.phi }, p.seed, marks, edges)
}
