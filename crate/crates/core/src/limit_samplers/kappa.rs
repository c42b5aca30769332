//! Lazy sampler for the κ-lattice, the local limit of Kleinberg graphs with
//! `ell > 2`.
//!
//! One infinite k-lattice; every node draws `q` shortcut displacements from
//! `κ(d) = d^-ell / (4ζ(ell−1))` per lattice point at L1 distance `d`.
//! Outgoing targets are keyed by `(position, slot)`, so they are consistent
//! wherever they are queried. Incoming shortcuts at `v` come from two parts:
//! sources within [`NEAR_RADIUS`] are scanned exactly, and the far field is a
//! Poisson thinning of all far `(source, slot)` pairs. A far arrival is
//! recorded as an override of that source's slot so later queries agree.

use std::collections::{HashMap, HashSet};

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use super::patch::lattice_offsets;
use super::zeta::zeta_shifted;
use crate::error::{invalid, Error, Result};
use crate::generators::diamond_point;
use crate::marked_graph::{
    exploration_rank, BallKind, BallNode, Direction, EdgeMark, Family, NodeMark, RootedNeighborhood,
};
use crate::rng::{derive, domain, KeyedRng};

/// Sources within this L1 distance are checked one by one.
pub const NEAR_RADIUS: i64 = 16;
const MAX_SHELLS: usize = 1 << 22;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KappaParams {
    pub q: usize,
    pub k: usize,
    /// Kernel exponent, `ell > 2`.
    pub ell: f64,
    /// Target bound on the expected number of incoming shortcuts per node
    /// lost to truncating the shell sum.
    pub tail_mass_tol: f64,
}

impl KappaParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.ell.is_finite() && self.ell > 2.0) {
            return Err(Error::Domain(format!("the κ-lattice needs ell > 2, got {}", self.ell)));
        }
        if self.k == 0 || self.k > 1 << 20 {
            return Err(invalid(format!("k must lie in 1..=2^20, got {}", self.k)));
        }
        if !(self.tail_mass_tol > 0.0 && self.tail_mass_tol < 1.0) {
            return Err(invalid(format!("tail_mass_tol must lie in (0, 1), got {}", self.tail_mass_tol)));
        }
        Ok(())
    }
}

/// Reusable κ-lattice sampler holding the shell tables.
pub struct KappaSampler {
    params: KappaParams,
    zeta: f64,
    /// `cum_out[d-1] = P(displacement length <= d)`.
    cum_out: Vec<f64>,
    /// Cumulative Poisson intensities of far shells `NEAR_RADIUS+1..=D`.
    cum_far: Vec<f64>,
    residual: f64,
    offsets: Vec<(i64, i64)>,
}

impl KappaSampler {
    pub fn new(params: KappaParams) -> Result<Self> {
        params.validate()?;
        let ell = params.ell;
        let zeta = zeta_shifted(ell, 1e-14)?;
        let q = params.q as f64;
        let mut cum_out = Vec::new();
        let mut acc = 0.0;
        let mut residual = q;
        for d in 1..=MAX_SHELLS {
            acc += (d as f64).powf(1.0 - ell) / zeta;
            cum_out.push(acc);
            residual = q * (1.0 - acc).max(0.0);
            if residual < params.tail_mass_tol && d as i64 >= NEAR_RADIUS {
                break;
            }
        }
        let mut cum_far = Vec::new();
        let mut far = 0.0;
        for d in (NEAR_RADIUS as usize + 1)..=cum_out.len() {
            let p = (d as f64).powf(-ell) / (4.0 * zeta);
            far += -(-p).ln_1p() * 4.0 * d as f64 * q;
            cum_far.push(far);
        }
        Ok(Self { params, zeta, cum_out, cum_far, residual, offsets: lattice_offsets(params.k as i64) })
    }

    pub fn params(&self) -> &KappaParams {
        &self.params
    }

    /// `ζ(ell − 1)`.
    pub fn zeta(&self) -> f64 {
        self.zeta
    }

    /// Number of shells kept before truncation.
    pub fn shells(&self) -> usize {
        self.cum_out.len()
    }

    /// Expected incoming shortcuts per node beyond the last kept shell.
    pub fn truncation_residual(&self) -> f64 {
        self.residual
    }

    fn draw_length(&self, rng: &mut impl Rng) -> i64 {
        let u = rng.random::<f64>();
        let last = *self.cum_out.last().expect("at least one shell");
        if u < last {
            return self.cum_out.partition_point(|&c| c <= u) as i64 + 1;
        }
        // beyond the table: continuous power-law tail P(L > x) ∝ x^(2-ell)
        let d = self.cum_out.len() as f64;
        let v = (u - last) / (1.0 - last).max(f64::MIN_POSITIVE);
        (d * (1.0 - v).max(f64::MIN_POSITIVE).powf(-1.0 / (self.params.ell - 2.0))).ceil().min(1e15) as i64
    }

    /// Radius-`r` ball around the origin.
    pub fn sample(&self, r: u32, seed: u64) -> RootedNeighborhood {
        let mut b = Builder {
            s: self,
            base: derive(seed, &[domain::KAPPA]),
            overrides: HashMap::new(),
            local: HashMap::new(),
            nodes: Vec::new(),
            edges: Vec::new(),
            seen: HashSet::new(),
        };
        b.visit((0, 0), 0);
        let mut head = 0;
        while head < b.nodes.len() {
            let (pos, depth) = b.nodes[head];
            let me = head as u32;
            head += 1;
            if depth >= r {
                continue;
            }
            for (other, mark, id) in b.neighbors(pos) {
                if b.seen.contains(&id) {
                    continue;
                }
                let j = b.visit(other, depth + 1);
                b.link(me, j, mark, id);
            }
        }
        // edges joining two nodes of the outer layer
        for i in 0..b.nodes.len() {
            let (pos, depth) = b.nodes[i];
            if depth != r {
                continue;
            }
            for &(dx, dy) in &self.offsets {
                let other = (pos.0 + dx, pos.1 + dy);
                if let Some(&j) = b.local.get(&other) {
                    b.link(i as u32, j, EdgeMark::lattice(), lattice_id(pos, other));
                }
            }
            for slot in 0..self.params.q as u32 {
                let t = b.target(pos, slot);
                if let Some(&j) = b.local.get(&t) {
                    let id = EdgeId::Shortcut { source: pos, slot };
                    b.link(i as u32, j, EdgeMark::shortcut(Direction::Outgoing, None), id);
                }
            }
        }
        let nodes = b
            .nodes
            .iter()
            .enumerate()
            .map(|(i, &(_, depth))| BallNode { id: i as u64, depth, mark: NodeMark::PatchMark { x: 0.0, y: 0.0 } })
            .collect();
        RootedNeighborhood::new(r, BallKind::GraphBall, nodes, b.edges)
    }

    /// Incoming shortcut count at the origin of one sampled lattice.
    pub fn incoming_degree(&self, seed: u64) -> usize {
        let mut b = Builder {
            s: self,
            base: derive(seed, &[domain::KAPPA]),
            overrides: HashMap::new(),
            local: HashMap::new(),
            nodes: Vec::new(),
            edges: Vec::new(),
            seen: HashSet::new(),
        };
        b.visit((0, 0), 0);
        b.incoming((0, 0)).len()
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
enum EdgeId {
    Lattice { a: (i64, i64), b: (i64, i64) },
    Shortcut { source: (i64, i64), slot: u32 },
}

fn lattice_id(a: (i64, i64), b: (i64, i64)) -> EdgeId {
    EdgeId::Lattice { a: a.min(b), b: a.max(b) }
}

struct Builder<'a> {
    s: &'a KappaSampler,
    base: u64,
    overrides: HashMap<((i64, i64), u32), (i64, i64)>,
    local: HashMap<(i64, i64), u32>,
    nodes: Vec<((i64, i64), u32)>,
    edges: Vec<(u32, u32, EdgeMark)>,
    seen: HashSet<EdgeId>,
}

impl Builder<'_> {
    fn node_key(&self, pos: (i64, i64)) -> u64 {
        derive(self.base, &[pos.0 as u64, pos.1 as u64])
    }

    fn target(&self, source: (i64, i64), slot: u32) -> (i64, i64) {
        if let Some(&t) = self.overrides.get(&(source, slot)) {
            return t;
        }
        let mut rng = KeyedRng::new(derive(self.node_key(source), &[1, slot as u64]));
        let d = self.s.draw_length(&mut rng);
        let (dx, dy) = diamond_point(d, rng.random_range(0..4 * d));
        (source.0 + dx, source.1 + dy)
    }

    /// `(source, slot)` pairs whose shortcut ends at `v`.
    fn incoming(&mut self, v: (i64, i64)) -> Vec<((i64, i64), u32)> {
        let q = self.s.params.q as u32;
        let mut found = Vec::new();
        for dy in -NEAR_RADIUS..=NEAR_RADIUS {
            let span = NEAR_RADIUS - dy.abs();
            for dx in -span..=span {
                let w = (v.0 + dx, v.1 + dy);
                if w == v {
                    continue;
                }
                for slot in 0..q {
                    if self.target(w, slot) == v {
                        found.push((w, slot));
                    }
                }
            }
        }
        // materialized sources beyond the near field
        for &(w, _) in &self.nodes {
            if (w.0 - v.0).abs() + (w.1 - v.1).abs() > NEAR_RADIUS {
                for slot in 0..q {
                    if self.target(w, slot) == v {
                        found.push((w, slot));
                    }
                }
            }
        }
        let total = self.s.cum_far.last().copied().unwrap_or(0.0);
        if total > 0.0 {
            let mut rng = KeyedRng::new(derive(self.node_key(v), &[2]));
            let arrivals = Poisson::new(total).expect("positive finite rate").sample(&mut rng) as u64;
            for _ in 0..arrivals {
                let u = rng.random::<f64>() * total;
                let shell = self.s.cum_far.partition_point(|&c| c <= u).min(self.s.cum_far.len() - 1);
                let d = shell as i64 + NEAR_RADIUS + 1;
                let (dx, dy) = diamond_point(d, rng.random_range(0..4 * d));
                let w = (v.0 + dx, v.1 + dy);
                let slot = rng.random_range(0..q);
                // a pair already committed elsewhere keeps its target
                if self.overrides.contains_key(&(w, slot)) || self.local.contains_key(&w) {
                    continue;
                }
                self.overrides.insert((w, slot), v);
                found.push((w, slot));
            }
        }
        found.sort_unstable();
        found.dedup();
        found
    }

    fn neighbors(&mut self, pos: (i64, i64)) -> Vec<((i64, i64), EdgeMark, EdgeId)> {
        let mut out: Vec<_> = self
            .s
            .offsets
            .iter()
            .map(|&(dx, dy)| {
                let other = (pos.0 + dx, pos.1 + dy);
                (other, EdgeMark::lattice(), lattice_id(pos, other))
            })
            .collect();
        for (w, slot) in self.incoming(pos) {
            out.push((w, EdgeMark::shortcut(Direction::Incoming, None), EdgeId::Shortcut { source: w, slot }));
        }
        for slot in 0..self.s.params.q as u32 {
            let t = self.target(pos, slot);
            out.push((t, EdgeMark::shortcut(Direction::Outgoing, None), EdgeId::Shortcut { source: pos, slot }));
        }
        out.sort_by_key(|(_, m, _)| exploration_rank(*m, Family::Lattice));
        out
    }

    fn visit(&mut self, pos: (i64, i64), depth: u32) -> u32 {
        *self.local.entry(pos).or_insert_with(|| {
            self.nodes.push((pos, depth));
            (self.nodes.len() - 1) as u32
        })
    }

    fn link(&mut self, a: u32, b: u32, mark: EdgeMark, id: EdgeId) {
        if self.seen.insert(id) {
            self.edges.push((a, b, mark));
        }
    }
}

/// One-shot convenience wrapper around [`KappaSampler`].
pub fn sample_kappa_ball(p: &KappaParams, r: u32, seed: u64) -> Result<RootedNeighborhood> {
    Ok(KappaSampler::new(*p)?.sample(r, seed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::marked_graph::EdgeKind;

    fn params(q: usize, ell: f64) -> KappaParams {
        KappaParams { q, k: 1, ell, tail_mass_tol: 1e-6 }
    }

    #[test]
    fn displacement_law_sums_to_one() {
        // the kept shells plus the integral estimate of the remaining ones add up to one
        for ell in [2.5, 3.0, 4.0] {
            let s = KappaSampler::new(params(1, ell)).unwrap();
            let d = s.shells() as f64 + 0.5;
            let tail = d.powf(2.0 - ell) / ((ell - 2.0) * s.zeta());
            assert!((s.cum_out.last().unwrap() + tail - 1.0).abs() < 1e-3 * tail + 1e-12, "ell={ell}");
        }
        // fast tails reach the requested truncation; slow ones stop at the shell cap
        assert!(KappaSampler::new(params(1, 3.0)).unwrap().truncation_residual() < 1e-6);
        let slow = KappaSampler::new(params(1, 2.5)).unwrap();
        assert_eq!(slow.shells(), MAX_SHELLS);
        assert!(slow.truncation_residual() < 1e-3);
    }

    #[test]
    fn far_intensity_matches_the_shell_sum() {
        // Σ_{d>R} 4dq·(−ln(1−p_d)) ≈ Σ_{d>R} q d^(1-ell)/ζ, up to O(p²) and the truncation
        let s = KappaSampler::new(params(2, 3.0)).unwrap();
        let near: f64 = s.cum_out[NEAR_RADIUS as usize - 1];
        let want = 2.0 * (s.cum_out.last().unwrap() - near);
        assert!((s.cum_far.last().unwrap() - want).abs() < 1e-4 * want);
    }

    #[test]
    fn without_shortcuts_the_ball_is_a_diamond() {
        let s = KappaSampler::new(params(0, 3.0)).unwrap();
        for r in 0..4u32 {
            let nb = s.sample(r, 1);
            assert_eq!(nb.len() as u32, 2 * r * (r + 1) + 1);
            assert!(nb.edges.iter().all(|e| e.mark.kind == EdgeKind::Lattice));
        }
    }

    #[test]
    fn marks_are_constant_and_outgoing_count_is_q() {
        let s = KappaSampler::new(params(2, 3.0)).unwrap();
        for seed in 0..100 {
            let nb = s.sample(1, seed);
            assert!(nb.nodes.iter().all(|n| n.mark == NodeMark::PatchMark { x: 0.0, y: 0.0 }));
            let out = nb.adjacency()[0]
                .iter()
                .filter(|(_, m)| m.kind == EdgeKind::Shortcut && m.direction == Direction::Outgoing)
                .count();
            assert_eq!(out, 2);
        }
    }

    #[test]
    fn deterministic_and_prefix_consistent() {
        let s = KappaSampler::new(params(1, 2.5)).unwrap();
        for seed in 0..20 {
            let big = s.sample(2, seed);
            assert_eq!(big, s.sample(2, seed));
            let small = s.sample(1, seed);
            assert!(crate::marked_graph::rooted_isomorphic(&big.truncate(1), &small, 0.0).unwrap());
        }
    }

    #[test]
    fn domain_checks() {
        assert!(matches!(KappaSampler::new(params(1, 2.0)), Err(Error::Domain(_))));
        assert!(KappaSampler::new(KappaParams { tail_mass_tol: 0.0, ..params(1, 3.0) }).is_err());
    }
}
