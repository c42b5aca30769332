//! Lazy sampler for the Full and Reduced k-Fuzz.
//!
//! A fuzz is a tree of k-path segments. Inside a segment, node `i` owns the
//! `k` ring slots `i → i+d`. Each slot keeps its ring edge with probability
//! `1 − φ`; otherwise it becomes an outgoing shortcut to the root of a fresh
//! Full k-Fuzz. Every node also receives `Poisson(kφ)` incoming shortcuts,
//! each from the root of a fresh Reduced k-Fuzz, whose root lacks the slot
//! that became that shortcut.
//!
//! All randomness is addressed by `(segment key, position, slot)`, so a ball
//! of radius `r` is the truncation of the ball of radius `r + 1` drawn with
//! the same seed.

use std::collections::{HashMap, HashSet};

use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::marked_graph::{
    exploration_rank, BallKind, BallNode, Direction, EdgeMark, Family, NodeMark, RootedNeighborhood,
};
use crate::rng::{derive, domain, unit, KeyedRng};

/// Parameters of the k-Fuzz limit of WS(n, φ, k).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FuzzParams {
    pub k: usize,
    pub phi: f64,
    /// Start from a Reduced k-Fuzz: one uniformly chosen root slot is absent.
    #[serde(default)]
    pub reduced_root: bool,
}

impl FuzzParams {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 || self.k > u16::MAX as usize {
            return Err(invalid(format!("k must lie in 1..=65535, got {}", self.k)));
        }
        if !(0.0..=1.0).contains(&self.phi) {
            return Err(invalid(format!("phi must lie in [0, 1], got {}", self.phi)));
        }
        Ok(())
    }
}

struct Segment {
    key: u64,
    /// Root slot turned into the shortcut to the parent, for reduced segments.
    missing: Option<u16>,
    /// Local index of the parent node and the parent edge as seen from this root.
    parent: Option<(u32, EdgeMark)>,
}

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
enum EdgeId {
    Ring { seg: u32, pos: i64, d: u16 },
    Shortcut { child: u64 },
}

enum Target {
    Node(u32, i64),
    Parent(u32),
    Child { key: u64, missing: Option<u16> },
}

struct Builder<'a> {
    p: &'a FuzzParams,
    poisson: Option<Poisson<f64>>,
    segments: Vec<Segment>,
    local: HashMap<(u32, i64), u32>,
    nodes: Vec<(u32, i64, u32)>,
    edges: Vec<(u32, u32, EdgeMark)>,
    seen: HashSet<EdgeId>,
}

fn missing_slot(key: u64, k: usize) -> u16 {
    1 + ((unit(derive(key, &[0])) * k as f64) as u16).min(k as u16 - 1)
}

impl<'a> Builder<'a> {
    fn kept(&self, seg: u32, pos: i64, d: u16) -> Option<bool> {
        let s = &self.segments[seg as usize];
        if pos == 0 && s.missing == Some(d) {
            return None;
        }
        Some(unit(derive(s.key, &[pos as u64, d as u64])) >= self.p.phi)
    }

    fn neighbors(&self, seg: u32, pos: i64) -> Vec<(Target, EdgeMark, EdgeId)> {
        let k = self.p.k as u16;
        let key = self.segments[seg as usize].key;
        let mut out = Vec::new();
        for d in 1..=k {
            match self.kept(seg, pos, d) {
                Some(true) => out.push((
                    Target::Node(seg, pos + d as i64),
                    EdgeMark::ring(Direction::Outgoing, d),
                    EdgeId::Ring { seg, pos, d },
                )),
                Some(false) => {
                    let child = derive(key, &[1, pos as u64, d as u64]);
                    out.push((
                        Target::Child { key: child, missing: None },
                        EdgeMark::shortcut(Direction::Outgoing, Some(d)),
                        EdgeId::Shortcut { child },
                    ));
                }
                None => {}
            }
        }
        for d in 1..=k {
            if self.kept(seg, pos - d as i64, d) == Some(true) {
                out.push((
                    Target::Node(seg, pos - d as i64),
                    EdgeMark::ring(Direction::Incoming, d),
                    EdgeId::Ring { seg, pos: pos - d as i64, d },
                ));
            }
        }
        if let Some(poisson) = &self.poisson {
            let mut rng = KeyedRng::new(derive(key, &[3, pos as u64]));
            let count = poisson.sample(&mut rng) as u64;
            for j in 0..count {
                let child = derive(key, &[2, pos as u64, j]);
                let d = missing_slot(child, self.p.k);
                out.push((
                    Target::Child { key: child, missing: Some(d) },
                    EdgeMark::shortcut(Direction::Incoming, Some(d)),
                    EdgeId::Shortcut { child },
                ));
            }
        }
        if pos == 0 {
            if let Some((parent, mark)) = self.segments[seg as usize].parent {
                out.push((Target::Parent(parent), mark, EdgeId::Shortcut { child: key }));
            }
        }
        out.sort_by_key(|(_, m, _)| (exploration_rank(*m, Family::Ring), m.ring_distance));
        out
    }

    fn visit(&mut self, seg: u32, pos: i64, depth: u32) -> u32 {
        *self.local.entry((seg, pos)).or_insert_with(|| {
            self.nodes.push((seg, pos, depth));
            (self.nodes.len() - 1) as u32
        })
    }

    fn link(&mut self, a: u32, b: u32, mark: EdgeMark, id: EdgeId) {
        if self.seen.insert(id) {
            self.edges.push((a, b, mark));
        }
    }
}

/// Radius-`r` ball around the root of a k-Fuzz, with the ring-family
/// exploration order.
pub fn sample_fuzz_ball(p: &FuzzParams, r: u32, seed: u64) -> Result<RootedNeighborhood> {
    p.validate()?;
    let rate = p.k as f64 * p.phi;
    let root_key = derive(seed, &[domain::FUZZ]);
    let mut b = Builder {
        p,
        poisson: (rate > 0.0).then(|| Poisson::new(rate).expect("positive finite rate")),
        segments: vec![Segment {
            key: root_key,
            missing: p.reduced_root.then(|| missing_slot(root_key, p.k)),
            parent: None,
        }],
        local: HashMap::new(),
        nodes: Vec::new(),
        edges: Vec::new(),
        seen: HashSet::new(),
    };
    b.visit(0, 0, 0);
    let mut head = 0;
    while head < b.nodes.len() {
        let (seg, pos, depth) = b.nodes[head];
        let me = head as u32;
        head += 1;
        if depth >= r {
            continue;
        }
        for (target, mark, id) in b.neighbors(seg, pos) {
            if b.seen.contains(&id) {
                continue;
            }
            let other = match target {
                Target::Node(s, q) => b.visit(s, q, depth + 1),
                Target::Parent(v) => v,
                Target::Child { key, missing } => {
                    let child = b.segments.len() as u32;
                    b.segments.push(Segment { key, missing, parent: Some((me, mark.flipped())) });
                    b.visit(child, 0, depth + 1)
                }
            };
            b.link(me, other, mark, id);
        }
    }
    // ring edges joining two nodes of the outer layer
    for i in 0..b.nodes.len() {
        let (seg, pos, depth) = b.nodes[i];
        if depth != r {
            continue;
        }
        for d in 1..=p.k as u16 {
            if b.kept(seg, pos, d) == Some(true) {
                if let Some(&j) = b.local.get(&(seg, pos + d as i64)) {
                    b.link(i as u32, j, EdgeMark::ring(Direction::Outgoing, d), EdgeId::Ring { seg, pos, d });
                }
            }
        }
    }
    let nodes = b
        .nodes
        .iter()
        .enumerate()
        .map(|(i, &(_, _, depth))| BallNode { id: i as u64, depth, mark: NodeMark::None })
        .collect();
    Ok(RootedNeighborhood::new(r, BallKind::GraphBall, nodes, b.edges))
}
