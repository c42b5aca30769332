//! Lazy sampler for the marked (q,k)-patch, the local limit of Kleinberg
//! graphs with `ell < 2`.
//!
//! A patch is an infinite k-lattice whose nodes all carry the patch's base
//! mark. Each node sends `q` shortcuts to the roots of fresh patches with
//! marks drawn from the outgoing density, and receives `Poisson(Λ_m)`
//! shortcuts from the roots of fresh reduced patches (root has `q − 1`
//! outgoing shortcuts) with marks drawn from the incoming density. Patches
//! therefore hang off each other as a tree.

use std::collections::{HashMap, HashSet};

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use super::density::{draw_p_in, draw_p_out, IncomingLaw, RateCache};
use crate::error::{invalid, Error, Result};
use crate::marked_graph::{
    exploration_rank, BallKind, BallNode, Direction, EdgeMark, Family, NodeMark, RootedNeighborhood,
};
use crate::rng::{derive, domain, KeyedRng};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PatchParams {
    /// Outgoing shortcuts per node; zero gives a bare lattice.
    pub q: usize,
    pub k: usize,
    /// Kernel exponent, `0 <= ell < 2`.
    pub ell: f64,
    #[serde(default)]
    pub reduced_root: bool,
    /// Absolute error target of each `Λ_m` quadrature.
    pub quad_tol: f64,
    #[serde(default)]
    pub incoming_law: IncomingLaw,
}

impl PatchParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.ell.is_finite() && (0.0..2.0).contains(&self.ell)) {
            return Err(Error::Domain(format!("the patch limit needs 0 <= ell < 2, got {}", self.ell)));
        }
        if self.k == 0 || self.k > 1 << 20 {
            return Err(invalid(format!("k must lie in 1..=2^20, got {}", self.k)));
        }
        if self.reduced_root && self.q == 0 {
            return Err(invalid("a reduced root needs q >= 1"));
        }
        if !(self.quad_tol > 0.0) {
            return Err(invalid(format!("quad_tol must be positive, got {}", self.quad_tol)));
        }
        Ok(())
    }
}

/// Offsets of the k-lattice neighbours, smaller `y` first, then smaller `x`.
pub(crate) fn lattice_offsets(k: i64) -> Vec<(i64, i64)> {
    let mut out = Vec::new();
    for dy in -k..=k {
        let span = k - dy.abs();
        for dx in -span..=span {
            if (dx, dy) != (0, 0) {
                out.push((dx, dy));
            }
        }
    }
    out
}

struct Patch {
    key: u64,
    mark: [f64; 2],
    reduced: bool,
    parent: Option<(u32, EdgeMark)>,
}

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
enum EdgeId {
    Lattice { patch: u32, a: (i64, i64), b: (i64, i64) },
    Shortcut { child: u64 },
}

enum Target {
    Node(u32, (i64, i64)),
    Parent(u32),
    Child { key: u64, reduced: bool },
}

/// Reusable patch sampler; holds the memoized `Λ_m` table.
pub struct PatchSampler {
    params: PatchParams,
    rates: RateCache,
    offsets: Vec<(i64, i64)>,
}

impl PatchSampler {
    pub fn new(params: PatchParams) -> Result<Self> {
        params.validate()?;
        Ok(Self {
            params,
            rates: RateCache::new(params.ell, params.q, params.quad_tol)?,
            offsets: lattice_offsets(params.k as i64),
        })
    }

    pub fn params(&self) -> &PatchParams {
        &self.params
    }

    /// Radius-`r` ball around the root of a patch.
    pub fn sample(&self, r: u32, seed: u64) -> RootedNeighborhood {
        let root_key = derive(seed, &[domain::PATCH]);
        let mut rng = KeyedRng::new(derive(root_key, &[0]));
        let mark = [rng.random::<f64>(), rng.random::<f64>()];
        let mut b = Builder {
            s: self,
            patches: vec![Patch { key: root_key, mark, reduced: self.params.reduced_root, parent: None }],
            local: HashMap::new(),
            nodes: Vec::new(),
            edges: Vec::new(),
            seen: HashSet::new(),
        };
        b.visit(0, (0, 0), 0);
        let mut head = 0;
        while head < b.nodes.len() {
            let (patch, pos, depth) = b.nodes[head];
            let me = head as u32;
            head += 1;
            if depth >= r {
                continue;
            }
            for (target, mark, id) in b.neighbors(patch, pos) {
                if b.seen.contains(&id) {
                    continue;
                }
                let other = match target {
                    Target::Node(p, at) => b.visit(p, at, depth + 1),
                    Target::Parent(v) => v,
                    Target::Child { key, reduced } => {
                        let base = b.patches[patch as usize].mark;
                        let mut rng = KeyedRng::new(derive(key, &[0]));
                        let mark_child = if reduced {
                            draw_p_in(base, self.params.ell, self.params.incoming_law, &mut rng)
                        } else {
                            draw_p_out(base, self.params.ell, &mut rng)
                        };
                        let child = b.patches.len() as u32;
                        b.patches.push(Patch { key, mark: mark_child, reduced, parent: Some((me, mark.flipped())) });
                        b.visit(child, (0, 0), depth + 1)
                    }
                };
                b.link(me, other, mark, id);
            }
        }
        // lattice edges joining two nodes of the outer layer
        for i in 0..b.nodes.len() {
            let (patch, pos, depth) = b.nodes[i];
            if depth != r {
                continue;
            }
            for &(dx, dy) in &self.offsets {
                let other = (pos.0 + dx, pos.1 + dy);
                if let Some(&j) = b.local.get(&(patch, other)) {
                    let id = lattice_id(patch, pos, other);
                    b.link(i as u32, j, EdgeMark::lattice(), id);
                }
            }
        }
        let nodes = b
            .nodes
            .iter()
            .enumerate()
            .map(|(i, &(patch, _, depth))| {
                let [x, y] = b.patches[patch as usize].mark;
                BallNode { id: i as u64, depth, mark: NodeMark::PatchMark { x, y } }
            })
            .collect();
        RootedNeighborhood::new(r, BallKind::GraphBall, nodes, b.edges)
    }
}

fn lattice_id(patch: u32, a: (i64, i64), b: (i64, i64)) -> EdgeId {
    EdgeId::Lattice { patch, a: a.min(b), b: a.max(b) }
}

struct Builder<'a> {
    s: &'a PatchSampler,
    patches: Vec<Patch>,
    local: HashMap<(u32, (i64, i64)), u32>,
    nodes: Vec<(u32, (i64, i64), u32)>,
    edges: Vec<(u32, u32, EdgeMark)>,
    seen: HashSet<EdgeId>,
}

impl Builder<'_> {
    fn neighbors(&self, patch: u32, pos: (i64, i64)) -> Vec<(Target, EdgeMark, EdgeId)> {
        let p = &self.patches[patch as usize];
        let node_key = derive(p.key, &[pos.0 as u64, pos.1 as u64]);
        let mut out: Vec<(Target, EdgeMark, EdgeId)> = self
            .s
            .offsets
            .iter()
            .map(|&(dx, dy)| {
                let other = (pos.0 + dx, pos.1 + dy);
                (Target::Node(patch, other), EdgeMark::lattice(), lattice_id(patch, pos, other))
            })
            .collect();
        let rate = self.s.rates.get(p.mark);
        if rate > 0.0 {
            let mut rng = KeyedRng::new(derive(node_key, &[3]));
            let count = Poisson::new(rate).expect("positive finite rate").sample(&mut rng) as u64;
            for j in 0..count {
                let child = derive(node_key, &[2, j]);
                out.push((
                    Target::Child { key: child, reduced: true },
                    EdgeMark::shortcut(Direction::Incoming, None),
                    EdgeId::Shortcut { child },
                ));
            }
        }
        let is_root = pos == (0, 0);
        let slots = if is_root && p.reduced { self.s.params.q - 1 } else { self.s.params.q };
        for j in 0..slots as u64 {
            let child = derive(node_key, &[1, j]);
            out.push((
                Target::Child { key: child, reduced: false },
                EdgeMark::shortcut(Direction::Outgoing, None),
                EdgeId::Shortcut { child },
            ));
        }
        if is_root {
            if let Some((parent, mark)) = p.parent {
                out.push((Target::Parent(parent), mark, EdgeId::Shortcut { child: p.key }));
            }
        }
        out.sort_by_key(|(_, m, _)| exploration_rank(*m, Family::Lattice));
        out
    }

    fn visit(&mut self, patch: u32, pos: (i64, i64), depth: u32) -> u32 {
        *self.local.entry((patch, pos)).or_insert_with(|| {
            self.nodes.push((patch, pos, depth));
            (self.nodes.len() - 1) as u32
        })
    }

    fn link(&mut self, a: u32, b: u32, mark: EdgeMark, id: EdgeId) {
        if self.seen.insert(id) {
            self.edges.push((a, b, mark));
        }
    }
}

/// One-shot convenience wrapper around [`PatchSampler`].
pub fn sample_patch_ball(p: &PatchParams, r: u32, seed: u64) -> Result<RootedNeighborhood> {
    Ok(PatchSampler::new(*p)?.sample(r, seed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::marked_graph::EdgeKind;

    fn params(q: usize, k: usize, ell: f64) -> PatchParams {
        PatchParams { q, k, ell, reduced_root: false, quad_tol: 1e-4, incoming_law: IncomingLaw::SelfNormalized }
    }

    #[test]
    fn lattice_offsets_fill_the_diamond() {
        assert_eq!(lattice_offsets(1), vec![(0, -1), (-1, 0), (1, 0), (0, 1)]);
        assert_eq!(lattice_offsets(3).len(), 2 * 3 * 4);
    }

    #[test]
    fn without_shortcuts_the_ball_is_a_lattice_diamond() {
        let s = PatchSampler::new(params(0, 1, 1.0)).unwrap();
        for r in 0..4u32 {
            let nb = s.sample(r, 5);
            let n = 2 * r * (r + 1) + 1;
            assert_eq!(nb.len() as u32, n);
            assert!(nb.edges.iter().all(|e| e.mark.kind == EdgeKind::Lattice));
            let first = nb.nodes[0].mark;
            assert!(nb.nodes.iter().all(|v| v.mark == first));
        }
        // k = 2: the outer layer is joined by lattice edges as well
        let nb = PatchSampler::new(params(0, 2, 1.0)).unwrap().sample(1, 0);
        assert_eq!(nb.len(), 13);
        let inner_edges = 12;
        let outer: usize = nb.edges.iter().filter(|e| e.a != 0).count();
        assert_eq!(nb.edges.len() - outer, inner_edges);
        assert!(outer > 0);
    }

    #[test]
    fn root_outgoing_counts() {
        for reduced in [false, true] {
            let p = PatchParams { reduced_root: reduced, ..params(3, 1, 1.2) };
            let s = PatchSampler::new(p).unwrap();
            for seed in 0..30 {
                let nb = s.sample(1, seed);
                let out = nb.adjacency()[0]
                    .iter()
                    .filter(|(_, m)| m.kind == EdgeKind::Shortcut && m.direction == Direction::Outgoing)
                    .count();
                assert_eq!(out, if reduced { 2 } else { 3 });
            }
        }
    }

    #[test]
    fn rejects_ell_two() {
        assert!(matches!(PatchSampler::new(params(1, 1, 2.0)), Err(Error::Domain(_))));
        assert!(PatchSampler::new(PatchParams { reduced_root: true, ..params(0, 1, 1.0) }).is_err());
    }

    #[test]
    fn deterministic_per_seed() {
        let s = PatchSampler::new(params(1, 1, 1.0)).unwrap();
        assert_eq!(s.sample(3, 8), s.sample(3, 8));
    }
}
