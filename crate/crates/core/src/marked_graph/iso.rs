//! Rooted isomorphism, canonical keys and the rooted-graph distance.
//!
//! Colour refinement gives every node an isomorphism-invariant colour; the
//! multiset of final colours is hashed into a digest. Equal digests are only
//! a hint: exact equivalence is decided by a backtracking search that maps
//! nodes onto same-coloured nodes.

use std::collections::HashMap;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{mark_gap, BallKind, EdgeMark, NodeMark, RootedNeighborhood};
use crate::error::{invalid, Result};
use crate::rng::{derive, mix64};

const SEED_LABEL: u64 = 0x6C61_6265_6C00;
const SEED_INIT: u64 = 0x696E_6974_0000;
const SEED_ROUND: u64 = 0x726F_756E_6400;
const UNREACHED: u32 = u32::MAX;

/// How node marks enter a canonical key.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MarkMode {
    /// Marks are dropped.
    Ignore,
    /// Marks are shifted so the root sits at the centre of cell zero.
    Recentered,
    /// Marks are binned at their absolute position.
    Absolute,
}

/// Census bucket key: a digest of the refined colour multiset plus a suffix
/// that separates non-isomorphic neighbourhoods sharing a digest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CanonicalKey {
    #[serde(serialize_with = "hex_out", deserialize_with = "hex_in")]
    pub digest: [u8; 16],
    pub suffix: u32,
    pub epsilon: f64,
}

impl CanonicalKey {
    pub fn hex(&self) -> String {
        format!("{}-{}", to_hex(&self.digest), self.suffix)
    }
}

fn to_hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn hex_out<S: Serializer>(d: &[u8; 16], s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&to_hex(d))
}

fn hex_in<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<[u8; 16], D::Error> {
    let text = String::deserialize(d)?;
    let bad = || serde::de::Error::custom(format!("bad digest {text:?}"));
    if text.len() != 32 {
        return Err(bad());
    }
    let mut out = [0u8; 16];
    for (i, byte) in out.iter_mut().enumerate() {
        *byte = u8::from_str_radix(text.get(2 * i..2 * i + 2).ok_or_else(bad)?, 16).map_err(|_| bad())?;
    }
    Ok(out)
}

fn cell(value: f64, eps: f64) -> u64 {
    if eps > 0.0 {
        (value / eps).floor() as i64 as u64
    } else {
        value.to_bits()
    }
}

/// Per-node integer labels carrying the binned marks.
///
/// Cells are half-open `[i·eps, (i+1)·eps)`; with `eps = 0` the exact
/// coordinates are used. In recentered mode the root lies at the centre of
/// its cell, so marks within `eps/2` of the root share the root's cell.
pub fn mark_labels(nb: &RootedNeighborhood, eps: f64, mode: MarkMode) -> Vec<u64> {
    let origin = match (mode, nb.nodes.first().and_then(|n| n.mark.point())) {
        (MarkMode::Recentered, Some(p)) => p,
        _ => [0.0, 0.0],
    };
    let shift = if mode == MarkMode::Recentered && eps > 0.0 { 0.5 * eps } else { 0.0 };
    nb.nodes
        .iter()
        .map(|n| match (mode, n.mark) {
            (MarkMode::Ignore, _) => 0,
            (_, NodeMark::PatchMark { x, y }) => {
                derive(SEED_LABEL, &[cell(x - origin[0] + shift, eps), cell(y - origin[1] + shift, eps)])
            }
            (_, NodeMark::LatticeCoord { x, y }) => derive(SEED_LABEL ^ 1, &[x as u64, y as u64]),
            (_, NodeMark::RingIndex { .. } | NodeMark::None) => 0,
        })
        .collect()
}

/// Adjacency, refined colours and digest of a labelled neighbourhood.
#[derive(Clone, Debug)]
pub(crate) struct Signature {
    pub adj: Vec<Vec<(u32, EdgeMark)>>,
    pub colors: Vec<u64>,
    pub digest: [u8; 16],
    pub edge_count: usize,
}

impl Signature {
    pub fn new(nb: &RootedNeighborhood, labels: &[u64]) -> Self {
        let adj = nb.adjacency();
        let n = adj.len();
        let dist = distances(&adj);
        let mut colors: Vec<u64> = (0..n)
            .map(|v| {
                let mut words: Vec<u64> = adj[v].iter().map(|(_, m)| m.code()).collect();
                words.sort_unstable();
                words.extend_from_slice(&[labels[v], dist[v] as u64, (v == 0) as u64]);
                derive(SEED_INIT, &words)
            })
            .collect();
        let mut classes = distinct(&colors);
        let mut words = Vec::new();
        for _ in 0..n {
            let next: Vec<u64> = (0..n)
                .map(|v| {
                    words.clear();
                    words.extend(adj[v].iter().map(|&(u, m)| mix64(m.code() ^ colors[u as usize].rotate_left(7))));
                    words.sort_unstable();
                    words.push(colors[v]);
                    derive(SEED_ROUND, &words)
                })
                .collect();
            colors = next;
            let c = distinct(&colors);
            if c == classes {
                break;
            }
            classes = c;
        }
        let mut sorted = colors.clone();
        sorted.sort_unstable();
        let edge_count = nb.edges.len();
        sorted.push(n as u64);
        sorted.push(edge_count as u64);
        let a = derive(0xA5A5, &sorted);
        let b = derive(0x5A5A, &sorted);
        let mut digest = [0u8; 16];
        digest[..8].copy_from_slice(&a.to_be_bytes());
        digest[8..].copy_from_slice(&b.to_be_bytes());
        Self { adj, colors, digest, edge_count }
    }
}

fn distinct(colors: &[u64]) -> usize {
    let mut c = colors.to_vec();
    c.sort_unstable();
    c.dedup();
    c.len()
}

fn distances(adj: &[Vec<(u32, EdgeMark)>]) -> Vec<u32> {
    let mut dist = vec![UNREACHED; adj.len()];
    if adj.is_empty() {
        return dist;
    }
    dist[0] = 0;
    let mut queue = std::collections::VecDeque::from([0u32]);
    while let Some(v) = queue.pop_front() {
        for &(u, _) in &adj[v as usize] {
            if dist[u as usize] == UNREACHED {
                dist[u as usize] = dist[v as usize] + 1;
                queue.push_back(u);
            }
        }
    }
    dist
}

/// Root-preserving isomorphism `a → b` respecting colours, edge marks with
/// multiplicity, and the node predicate. Returns the image of each node of `a`.
pub(crate) fn find_isomorphism(
    a: &Signature,
    b: &Signature,
    node_ok: impl Fn(usize, usize) -> bool,
) -> Option<Vec<u32>> {
    let n = a.adj.len();
    if n != b.adj.len() || a.edge_count != b.edge_count || a.digest != b.digest {
        return None;
    }
    if n == 0 {
        return Some(Vec::new());
    }
    let mut by_color: HashMap<u64, Vec<u32>> = HashMap::new();
    for (x, &c) in b.colors.iter().enumerate() {
        by_color.entry(c).or_default().push(x as u32);
    }
    // match in breadth-first order so each node meets already-mapped neighbours
    let seq: Vec<usize> = {
        let mut seen = vec![false; n];
        let mut seq = vec![0usize];
        seen[0] = true;
        let mut head = 0;
        while head < seq.len() {
            let v = seq[head];
            head += 1;
            for &(u, _) in &a.adj[v] {
                if !seen[u as usize] {
                    seen[u as usize] = true;
                    seq.push(u as usize);
                }
            }
        }
        seq.extend((0..n).filter(|&v| !seen[v]));
        seq
    };
    let root_only = [0u32];
    let candidates: Vec<&[u32]> = seq
        .iter()
        .map(|&v| {
            if v == 0 {
                if b.colors[0] == a.colors[0] {
                    &root_only[..]
                } else {
                    &[][..]
                }
            } else {
                by_color.get(&a.colors[v]).map_or(&[][..], |c| c.as_slice())
            }
        })
        .collect();
    const NONE: u32 = u32::MAX;
    let mut map = vec![NONE; n];
    let mut inv = vec![NONE; n];
    let mut ptr = vec![0usize; n];
    let (mut la, mut lb) = (Vec::new(), Vec::new());
    let mut i = 0;
    loop {
        if i == n {
            return Some(map);
        }
        let v = seq[i];
        let mut placed = false;
        while ptr[i] < candidates[i].len() {
            let x = candidates[i][ptr[i]] as usize;
            ptr[i] += 1;
            if inv[x] != NONE || !node_ok(v, x) {
                continue;
            }
            la.clear();
            la.extend(a.adj[v].iter().filter(|(u, _)| map[*u as usize] != NONE).map(|&(u, m)| (map[u as usize], m)));
            lb.clear();
            lb.extend(b.adj[x].iter().filter(|(y, _)| inv[*y as usize] != NONE).map(|&(y, m)| (y, m)));
            if la.len() != lb.len() {
                continue;
            }
            la.sort_unstable();
            lb.sort_unstable();
            if la != lb {
                continue;
            }
            map[v] = x as u32;
            inv[x] = v as u32;
            placed = true;
            break;
        }
        if placed {
            i += 1;
            if i < n {
                ptr[i] = 0;
            }
        } else {
            if i == 0 {
                return None;
            }
            ptr[i] = 0;
            i -= 1;
            let v = seq[i];
            inv[map[v] as usize] = NONE;
            map[v] = NONE;
        }
    }
}

fn check_comparable(a: &RootedNeighborhood, b: &RootedNeighborhood) -> Result<()> {
    if a.ball_kind != b.ball_kind {
        return Err(invalid(format!("ball kinds differ: {:?} vs {:?}", a.ball_kind, b.ball_kind)));
    }
    if a.radius != b.radius {
        return Err(invalid(format!("radii differ: {} vs {}", a.radius, b.radius)));
    }
    Ok(())
}

fn isomorphic_within(a: &RootedNeighborhood, b: &RootedNeighborhood, eps: f64) -> bool {
    if a.len() != b.len() || a.edges.len() != b.edges.len() {
        return false;
    }
    let sa = Signature::new(a, &vec![0; a.len()]);
    let sb = Signature::new(b, &vec![0; b.len()]);
    let slack = eps + 1e-12;
    find_isomorphism(&sa, &sb, |v, x| mark_gap(&a.nodes[v].mark, &b.nodes[x].mark) <= slack).is_some()
}

/// Whether a root-preserving isomorphism matches all edge marks exactly and
/// moves every node mark by at most `eps` in L1.
pub fn rooted_isomorphic(a: &RootedNeighborhood, b: &RootedNeighborhood, eps: f64) -> Result<bool> {
    check_comparable(a, b)?;
    Ok(isomorphic_within(a, b, eps))
}

/// Key of a neighbourhood with absolute marks binned at width `eps`.
pub fn canonical_key(nb: &RootedNeighborhood, eps: f64) -> CanonicalKey {
    let labels = mark_labels(nb, eps, MarkMode::Absolute);
    CanonicalKey { digest: Signature::new(nb, &labels).digest, suffix: 0, epsilon: eps }
}

/// Distance `1/(1 + R*)` between two graph balls, where `R*` is the largest
/// radius at which the truncated balls are isomorphic with mark gaps at most
/// `1/R*`. Balls that agree up to their stored radius `R` get `1/(1 + R)`,
/// which bounds the true distance from above.
pub fn rooted_distance(a: &RootedNeighborhood, b: &RootedNeighborhood) -> Result<f64> {
    check_comparable(a, b)?;
    if a.ball_kind != BallKind::GraphBall {
        return Err(invalid("rooted distance is defined on graph balls"));
    }
    let mut agree = 0;
    for r in 1..=a.radius {
        if !isomorphic_within(&a.truncate(r), &b.truncate(r), 1.0 / r as f64) {
            break;
        }
        agree = r;
    }
    Ok(1.0 / (1.0 + agree as f64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::marked_graph::{BallNode, Direction, EdgeKind};

    fn node(id: u64, depth: u32) -> BallNode {
        BallNode { id, depth, mark: NodeMark::None }
    }

    fn ring(dir: Direction) -> EdgeMark {
        EdgeMark::ring(dir, 1)
    }

    fn path_rooted_at(center: bool) -> RootedNeighborhood {
        let nodes =
            if center { vec![node(0, 0), node(1, 1), node(2, 1)] } else { vec![node(0, 0), node(1, 1), node(2, 2)] };
        let edges = if center {
            vec![(0, 1, ring(Direction::Outgoing)), (0, 2, ring(Direction::Outgoing))]
        } else {
            vec![(0, 1, ring(Direction::Outgoing)), (1, 2, ring(Direction::Outgoing))]
        };
        RootedNeighborhood::new(2, BallKind::GraphBall, nodes, edges)
    }

    fn patch(x: f64, y: f64) -> RootedNeighborhood {
        let nodes = vec![BallNode { id: 0, depth: 0, mark: NodeMark::PatchMark { x, y } }];
        RootedNeighborhood::new(0, BallKind::GraphBall, nodes, Vec::new())
    }

    #[test]
    fn reflexive_and_size_sensitive() {
        let a = path_rooted_at(true);
        assert!(rooted_isomorphic(&a, &a, 0.0).unwrap());
        let mut b = a.clone();
        b.nodes.pop();
        b.edges.pop();
        assert!(!rooted_isomorphic(&a, &b, 1.0).unwrap());
    }

    #[test]
    fn mark_tolerance_is_l1() {
        let (a, b) = (patch(0.30, 0.40), patch(0.32, 0.41));
        assert!(rooted_isomorphic(&a, &b, 0.05).unwrap());
        assert!(!rooted_isomorphic(&a, &b, 0.02).unwrap());
    }

    #[test]
    fn mismatched_kinds_are_an_error() {
        let a = patch(0.1, 0.1);
        let mut b = a.clone();
        b.ball_kind = BallKind::LatticeBall;
        assert!(rooted_isomorphic(&a, &b, 0.1).is_err());
    }

    #[test]
    fn path_keys_depend_on_root_position() {
        let centre = path_rooted_at(true);
        let leaf = path_rooted_at(false);
        assert_eq!(canonical_key(&centre, 0.05), canonical_key(&centre.clone(), 0.05));
        assert_ne!(canonical_key(&centre, 0.05).digest, canonical_key(&leaf, 0.05).digest);
        assert!(!rooted_isomorphic(&centre, &leaf, 0.0).unwrap());
    }

    #[test]
    fn isomorphism_ignores_local_numbering() {
        // the same star with leaves listed in a different order
        let a = RootedNeighborhood::new(
            1,
            BallKind::GraphBall,
            vec![node(0, 0), node(1, 1), node(2, 1)],
            vec![(0, 1, ring(Direction::Outgoing)), (0, 2, ring(Direction::Incoming))],
        );
        let b = RootedNeighborhood::new(
            1,
            BallKind::GraphBall,
            vec![node(0, 0), node(1, 1), node(2, 1)],
            vec![(0, 2, ring(Direction::Outgoing)), (0, 1, ring(Direction::Incoming))],
        );
        assert!(rooted_isomorphic(&a, &b, 0.0).unwrap());
        assert_eq!(canonical_key(&a, 0.0), canonical_key(&b, 0.0));
        let c = RootedNeighborhood::new(
            1,
            BallKind::GraphBall,
            vec![node(0, 0), node(1, 1), node(2, 1)],
            vec![(0, 2, ring(Direction::Outgoing)), (0, 1, ring(Direction::Outgoing))],
        );
        assert!(!rooted_isomorphic(&a, &c, 0.0).unwrap());
    }

    #[test]
    fn every_single_mark_change_changes_the_key() {
        // root with one neighbour on each side; try every WS mark on one edge
        let k = 3u16;
        let mut marks = Vec::new();
        for kind in [EdgeKind::Ring, EdgeKind::Shortcut] {
            for dir in [Direction::Outgoing, Direction::Incoming] {
                for d in 1..=k {
                    marks.push(EdgeMark { kind, direction: dir, ring_distance: Some(d) });
                }
            }
        }
        assert_eq!(marks.len(), 4 * k as usize);
        let fixed = EdgeMark::ring(Direction::Incoming, 1);
        let balls: Vec<RootedNeighborhood> = marks
            .iter()
            .map(|&m| {
                RootedNeighborhood::new(
                    1,
                    BallKind::GraphBall,
                    vec![node(0, 0), node(1, 1), node(2, 1)],
                    vec![(0, 1, m), (0, 2, fixed)],
                )
            })
            .collect();
        for i in 0..balls.len() {
            for j in 0..balls.len() {
                let same_key = canonical_key(&balls[i], 0.0) == canonical_key(&balls[j], 0.0);
                assert_eq!(same_key, i == j, "marks {:?} vs {:?}", marks[i], marks[j]);
                assert_eq!(rooted_isomorphic(&balls[i], &balls[j], 0.0).unwrap(), i == j);
            }
        }
    }

    #[test]
    fn distance_examples() {
        let a = path_rooted_at(true);
        assert_eq!(rooted_distance(&a, &a).unwrap(), 1.0 / 3.0);
        let leaf = path_rooted_at(false);
        assert_eq!(rooted_distance(&a, &leaf).unwrap(), 1.0);
        // same one-ball, different second layer
        let mut deeper = a.clone();
        deeper.nodes.push(node(3, 2));
        deeper.edges.push(crate::marked_graph::BallEdge { a: 1, b: 3, mark: ring(Direction::Outgoing) });
        assert_eq!(rooted_distance(&a, &deeper).unwrap(), 0.5);
    }

    #[test]
    fn recentered_labels_put_the_root_mid_cell() {
        let nodes = vec![
            BallNode { id: 0, depth: 0, mark: NodeMark::PatchMark { x: 0.5, y: 0.5 } },
            BallNode { id: 1, depth: 1, mark: NodeMark::PatchMark { x: 0.49, y: 0.5 } },
            BallNode { id: 2, depth: 1, mark: NodeMark::PatchMark { x: 0.9, y: 0.5 } },
        ];
        let nb = RootedNeighborhood::new(1, BallKind::GraphBall, nodes, Vec::new());
        let l = mark_labels(&nb, 0.05, MarkMode::Recentered);
        assert_eq!(l[0], l[1]);
        assert_ne!(l[0], l[2]);
        let abs = mark_labels(&nb, 0.05, MarkMode::Absolute);
        assert_ne!(abs[0], abs[1]);
        assert!(mark_labels(&nb, 0.05, MarkMode::Ignore).iter().all(|&x| x == 0));
    }
}
