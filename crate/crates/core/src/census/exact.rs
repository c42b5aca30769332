//! Exact law of rooted balls of the 1-Fuzz.
//!
//! With `k = 1` the fuzz is a multi-type branching tree. Reaching a node
//! along an edge fixes its type, and the type fixes which of the node's own
//! random choices are still open:
//!
//! | type | reached via | out slot | left ring neighbour |
//! |------|-------------|----------|---------------------|
//! | full root | start, outgoing shortcut | open | open |
//! | right | outgoing ring | open | is the parent |
//! | left | incoming ring | is the parent | open |
//! | reduced root | incoming shortcut | absent | open |
//!
//! An open out slot holds a ring edge with probability `1 − φ` and a shortcut
//! otherwise; an open left neighbour is present with probability `1 − φ`.
//! Each node also has `Poisson(φ)` incoming shortcuts, and since those
//! children are exchangeable a multiset with multiplicities `m_j` has weight
//! `e^-φ φ^c / Π m_j!`. Nodes on the outer layer contribute no factor.

use std::collections::BTreeMap;

use super::{CensusSource, CensusSpec, NeighborhoodDistribution, Tally};
use crate::error::{invalid, Error, Result};
use crate::marked_graph::{BallKind, BallNode, Direction, EdgeKind, EdgeMark, MarkMode, NodeMark, RootedNeighborhood};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum NodeType {
    FullRoot,
    Right,
    Left,
    ReducedRoot,
}

impl NodeType {
    fn out_slot_open(self) -> bool {
        matches!(self, NodeType::FullRoot | NodeType::Right)
    }

    fn left_open(self) -> bool {
        !matches!(self, NodeType::Right)
    }

    fn of_child(mark: EdgeMark) -> NodeType {
        match (mark.kind, mark.direction) {
            (EdgeKind::Ring, Direction::Outgoing) => NodeType::Right,
            (EdgeKind::Ring, _) => NodeType::Left,
            (_, Direction::Outgoing) => NodeType::FullRoot,
            _ => NodeType::ReducedRoot,
        }
    }
}

fn factorial(m: usize) -> f64 {
    (1..=m).map(|i| i as f64).product()
}

fn poisson_multiset_weight(phi: f64, multiplicities: impl Iterator<Item = usize>) -> f64 {
    let (mut count, mut denom) = (0i32, 1.0);
    for m in multiplicities {
        count += m as i32;
        denom *= factorial(m);
    }
    (-phi).exp() * phi.powi(count) / denom
}

struct Tree {
    adj: Vec<Vec<(u32, EdgeMark)>>,
    depth: Vec<u32>,
    radius: u32,
    phi: f64,
}

impl Tree {
    fn children(&self, v: usize, parent: Option<usize>) -> impl Iterator<Item = (usize, EdgeMark)> + '_ {
        self.adj[v].iter().map(|&(u, m)| (u as usize, m)).filter(move |&(u, _)| Some(u) != parent)
    }

    fn encode(&self, v: usize, parent: usize) -> String {
        let mut parts: Vec<String> =
            self.children(v, Some(parent)).map(|(u, m)| format!("{}:{}", m.code(), self.encode(u, v))).collect();
        parts.sort();
        format!("({})", parts.join(","))
    }

    fn probability(&self, v: usize, parent: Option<usize>, ty: NodeType) -> f64 {
        if self.depth[v] >= self.radius {
            return 1.0;
        }
        let phi = self.phi;
        let (mut out, mut out_ring, mut left) = (0, 0, 0);
        let mut incoming: BTreeMap<String, usize> = BTreeMap::new();
        for (u, m) in self.children(v, parent) {
            match (m.kind, m.direction) {
                (EdgeKind::Ring, Direction::Outgoing) => {
                    out += 1;
                    out_ring += 1;
                }
                (EdgeKind::Shortcut, Direction::Outgoing) => out += 1,
                (EdgeKind::Ring, Direction::Incoming) => left += 1,
                _ => *incoming.entry(self.encode(u, v)).or_default() += 1,
            }
        }
        let mut p = 1.0;
        if ty.out_slot_open() {
            if out != 1 {
                return 0.0;
            }
            p *= if out_ring == 1 { 1.0 - phi } else { phi };
        } else if out != 0 {
            return 0.0;
        }
        if ty.left_open() {
            if left > 1 {
                return 0.0;
            }
            p *= if left == 1 { 1.0 - phi } else { phi };
        } else if left != 0 {
            return 0.0;
        }
        p *= poisson_multiset_weight(phi, incoming.values().copied());
        for (u, m) in self.children(v, parent) {
            if p == 0.0 {
                break;
            }
            p *= self.probability(u, Some(v), NodeType::of_child(m));
        }
        p
    }
}

/// Probability that the radius-`r` ball of the Full 1-Fuzz with rewiring
/// probability `phi` is isomorphic to `shape` (with `r = shape.radius`).
///
/// Shapes that cannot occur get probability zero. Shapes outside the scope
/// of the product formula (cycles, ring distances other than one, lattice
/// edges) are an unsupported error.
pub fn exact_fuzz_probability(shape: &RootedNeighborhood, phi: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&phi) {
        return Err(invalid(format!("phi must lie in [0, 1], got {phi}")));
    }
    if shape.ball_kind != BallKind::GraphBall {
        return Err(Error::Unsupported("the exact law covers graph balls".into()));
    }
    if shape.is_empty() {
        return Err(invalid("empty neighbourhood"));
    }
    for e in &shape.edges {
        if !matches!(e.mark.kind, EdgeKind::Ring | EdgeKind::Shortcut) || e.mark.ring_distance != Some(1) {
            return Err(Error::Unsupported(format!("edge mark {:?} does not occur in a 1-Fuzz", e.mark)));
        }
    }
    let n = shape.len();
    if shape.edges.len() + 1 != n {
        return Err(Error::Unsupported("the exact law covers trees only".into()));
    }
    let adj = shape.adjacency();
    let mut depth = vec![u32::MAX; n];
    depth[0] = 0;
    let mut queue = std::collections::VecDeque::from([0usize]);
    while let Some(v) = queue.pop_front() {
        for &(u, _) in &adj[v] {
            if depth[u as usize] == u32::MAX {
                depth[u as usize] = depth[v] + 1;
                queue.push_back(u as usize);
            }
        }
    }
    if depth.contains(&u32::MAX) {
        return Err(Error::Unsupported("the exact law covers connected balls only".into()));
    }
    if depth.iter().any(|&d| d > shape.radius) {
        return Ok(0.0);
    }
    let tree = Tree { adj, depth, radius: shape.radius, phi };
    Ok(tree.probability(0, None, NodeType::FullRoot))
}

/// Total variation between a census and the exact 1-Fuzz law at its radius.
///
/// Each bucket is compared with the exact probability of its class; the
/// exact mass of classes the census never saw is `1 − Σ exact`.
pub fn tv_to_exact_fuzz(dist: &NeighborhoodDistribution, phi: f64) -> Result<f64> {
    if dist.ball_kind != BallKind::GraphBall {
        return Err(invalid("the exact law covers graph balls"));
    }
    let mut diff = 0.0;
    let mut covered = 0.0;
    for b in &dist.buckets {
        let exact = match exact_fuzz_probability(&b.representative, phi) {
            Ok(p) => p,
            Err(Error::Unsupported(_)) => 0.0,
            Err(e) => return Err(e),
        };
        diff += (b.mass - exact).abs();
        covered += exact;
    }
    Ok(0.5 * (diff + (1.0 - covered).max(0.0)))
}

/// A shape of the 1-Fuzz ball together with its exact probability.
#[derive(Clone, Debug)]
pub struct FuzzShape {
    pub neighborhood: RootedNeighborhood,
    pub probability: f64,
}

#[derive(Clone)]
struct ShapeTree {
    children: Vec<(EdgeMark, ShapeTree)>,
}

fn enumerate(ty: NodeType, remaining: u32, phi: f64, max_in: usize) -> Vec<(ShapeTree, f64)> {
    if remaining == 0 {
        return vec![(ShapeTree { children: Vec::new() }, 1.0)];
    }
    let sub = |t| enumerate(t, remaining - 1, phi, max_in);
    let ring_out = EdgeMark::ring(Direction::Outgoing, 1);
    let short_out = EdgeMark::shortcut(Direction::Outgoing, Some(1));
    let ring_in = EdgeMark::ring(Direction::Incoming, 1);
    let short_in = EdgeMark::shortcut(Direction::Incoming, Some(1));

    let mut outs: Vec<(Option<(EdgeMark, ShapeTree)>, f64)> = Vec::new();
    if ty.out_slot_open() {
        outs.extend(sub(NodeType::Right).into_iter().map(|(t, p)| (Some((ring_out, t)), (1.0 - phi) * p)));
        outs.extend(sub(NodeType::FullRoot).into_iter().map(|(t, p)| (Some((short_out, t)), phi * p)));
    } else {
        outs.push((None, 1.0));
    }
    let mut lefts: Vec<(Option<(EdgeMark, ShapeTree)>, f64)> = Vec::new();
    if ty.left_open() {
        lefts.extend(sub(NodeType::Left).into_iter().map(|(t, p)| (Some((ring_in, t)), (1.0 - phi) * p)));
        lefts.push((None, phi));
    } else {
        lefts.push((None, 1.0));
    }
    // multisets of incoming subtrees as non-decreasing index sequences
    let pool = sub(NodeType::ReducedRoot);
    let mut multisets: Vec<(Vec<usize>, f64)> = Vec::new();
    let mut stack: Vec<Vec<usize>> = vec![Vec::new()];
    while let Some(seq) = stack.pop() {
        let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
        for &i in &seq {
            *counts.entry(i).or_default() += 1;
        }
        let weight =
            poisson_multiset_weight(phi, counts.values().copied()) * seq.iter().map(|&i| pool[i].1).product::<f64>();
        if seq.len() < max_in {
            let start = seq.last().copied().unwrap_or(0);
            for i in start..pool.len() {
                let mut next = seq.clone();
                next.push(i);
                stack.push(next);
            }
        }
        multisets.push((seq, weight));
    }
    let mut out = Vec::new();
    for (o, po) in &outs {
        for (l, pl) in &lefts {
            for (seq, pm) in &multisets {
                let p = po * pl * pm;
                if p == 0.0 {
                    continue;
                }
                let mut children: Vec<(EdgeMark, ShapeTree)> = Vec::new();
                children.extend(o.iter().cloned());
                children.extend(l.iter().cloned());
                children.extend(seq.iter().map(|&i| (short_in, pool[i].0.clone())));
                out.push((ShapeTree { children }, p));
            }
        }
    }
    out
}

fn to_neighborhood(tree: &ShapeTree, radius: u32) -> RootedNeighborhood {
    let mut nodes = vec![BallNode { id: 0, depth: 0, mark: NodeMark::None }];
    let mut edges = Vec::new();
    let mut queue = std::collections::VecDeque::from([(tree, 0u32)]);
    while let Some((t, at)) = queue.pop_front() {
        let depth = nodes[at as usize].depth;
        for (mark, child) in &t.children {
            let id = nodes.len() as u32;
            nodes.push(BallNode { id: id as u64, depth: depth + 1, mark: NodeMark::None });
            edges.push((at, id, *mark));
            queue.push_back((child, id));
        }
    }
    RootedNeighborhood::new(radius, BallKind::GraphBall, nodes, edges)
}

/// All radius-`r` shapes of the Full 1-Fuzz with at most `max_incoming`
/// incoming shortcuts per node, with their exact probabilities.
pub fn enumerate_fuzz_shapes(r: u32, phi: f64, max_incoming: usize) -> Result<Vec<FuzzShape>> {
    if !(0.0..=1.0).contains(&phi) {
        return Err(invalid(format!("phi must lie in [0, 1], got {phi}")));
    }
    Ok(enumerate(NodeType::FullRoot, r, phi, max_incoming)
        .into_iter()
        .map(|(t, p)| FuzzShape { neighborhood: to_neighborhood(&t, r), probability: p })
        .collect())
}

/// The enumerated exact law as a census-shaped distribution (masses cover
/// only the enumerated shapes).
pub fn exact_fuzz_distribution(r: u32, phi: f64, max_incoming: usize) -> Result<NeighborhoodDistribution> {
    let spec = CensusSpec::graph_ball(r, 0.0, MarkMode::Ignore);
    let mut tally = Tally::default();
    for (i, s) in enumerate_fuzz_shapes(r, phi, max_incoming)?.into_iter().enumerate() {
        tally.add_weighted(i as u64, s.neighborhood, &spec, 0, s.probability);
    }
    Ok(tally.finish(spec, CensusSource::ExactPmf { phi, max_incoming }, 0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::marked_graph::rooted_isomorphic;

    fn star(radius: u32, marks: &[EdgeMark]) -> RootedNeighborhood {
        let mut nodes = vec![BallNode { id: 0, depth: 0, mark: NodeMark::None }];
        nodes.extend((1..=marks.len()).map(|i| BallNode { id: i as u64, depth: 1, mark: NodeMark::None }));
        RootedNeighborhood::new(
            radius,
            BallKind::GraphBall,
            nodes,
            marks.iter().enumerate().map(|(i, &m)| (0, i as u32 + 1, m)),
        )
    }

    #[test]
    fn plain_ring_neighbourhood() {
        let nb = star(1, &[EdgeMark::ring(Direction::Outgoing, 1), EdgeMark::ring(Direction::Incoming, 1)]);
        let p = exact_fuzz_probability(&nb, 0.5).unwrap();
        assert!((p - 0.25 * (-0.5f64).exp()).abs() < 1e-15);
        assert!((p - 0.151633).abs() < 1e-6);
        assert_eq!(exact_fuzz_probability(&nb, 0.0).unwrap(), 1.0);
        let with_shortcut =
            star(1, &[EdgeMark::shortcut(Direction::Outgoing, Some(1)), EdgeMark::ring(Direction::Incoming, 1)]);
        assert_eq!(exact_fuzz_probability(&with_shortcut, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn impossible_shapes_have_zero_probability() {
        let two_out =
            star(1, &[EdgeMark::ring(Direction::Outgoing, 1), EdgeMark::shortcut(Direction::Outgoing, Some(1))]);
        assert_eq!(exact_fuzz_probability(&two_out, 0.3).unwrap(), 0.0);
        let cycle = RootedNeighborhood::new(
            1,
            BallKind::GraphBall,
            (0..3).map(|i| BallNode { id: i, depth: (i > 0) as u32, mark: NodeMark::None }).collect(),
            [
                (0, 1, EdgeMark::ring(Direction::Outgoing, 1)),
                (0, 2, EdgeMark::ring(Direction::Incoming, 1)),
                (1, 2, EdgeMark::shortcut(Direction::Outgoing, Some(1))),
            ],
        );
        assert!(matches!(exact_fuzz_probability(&cycle, 0.3), Err(Error::Unsupported(_))));
        let k2 = star(1, &[EdgeMark::ring(Direction::Outgoing, 2)]);
        assert!(matches!(exact_fuzz_probability(&k2, 0.3), Err(Error::Unsupported(_))));
    }

    #[test]
    fn enumerated_radius_one_shapes_sum_to_one() {
        for phi in [0.1, 0.3, 0.5, 0.9] {
            let shapes = enumerate_fuzz_shapes(1, phi, 3).unwrap();
            let total: f64 = shapes.iter().map(|s| s.probability).sum();
            // P(Poisson(phi) >= 4) is the mass of the omitted shapes
            let head: f64 = (0..4).map(|c| (-phi).exp() * phi.powi(c) / factorial(c as usize)).sum();
            assert!((total + (1.0 - head) - 1.0).abs() < 1e-12, "phi={phi}");
            for s in &shapes {
                assert!((exact_fuzz_probability(&s.neighborhood, phi).unwrap() - s.probability).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn enumerated_shapes_are_distinct_and_match_the_formula() {
        let phi = 0.3;
        let shapes = enumerate_fuzz_shapes(2, phi, 2).unwrap();
        for s in &shapes {
            let p = exact_fuzz_probability(&s.neighborhood, phi).unwrap();
            assert!((p - s.probability).abs() < 1e-14 * p.max(1e-300), "{p} vs {}", s.probability);
        }
        let dist = exact_fuzz_distribution(2, phi, 2).unwrap();
        assert_eq!(dist.buckets.len(), shapes.len());
        for pair in shapes.windows(2).take(200) {
            assert!(!rooted_isomorphic(&pair[0].neighborhood, &pair[1].neighborhood, 0.0).unwrap());
        }
        // two incoming subtrees of the same shape carry the 1/2! factor
        assert!(dist.total_mass() < 1.0 && dist.total_mass() > 0.97);
    }
}
