//! Marked graphs, rooted neighbourhoods and their comparison.
//!
//! A [`MarkedGraph`] stores an undirected multigraph whose edges remember the
//! direction in which the generator created them. Each endpoint sees the edge
//! with its own [`EdgeMark`]: the tail sees it as outgoing, the head as
//! incoming. Lattice edges are undirected at both ends.

mod ball;
mod iso;

pub use ball::{graph_ball, lattice_ball};
pub use iso::{canonical_key, mark_labels, rooted_distance, rooted_isomorphic, CanonicalKey, MarkMode};
pub(crate) use iso::{find_isomorphism, Signature};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Per-node mark. A graph uses a single variant for all of its nodes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NodeMark {
    None,
    RingIndex {
        index: u32,
    },
    LatticeCoord {
        x: u32,
        y: u32,
    },
    /// Normalized position in the unit square.
    PatchMark {
        x: f64,
        y: f64,
    },
}

impl NodeMark {
    /// Coordinates used by the L1 mark metric; `None` for non-metric marks.
    pub fn point(&self) -> Option<[f64; 2]> {
        match *self {
            NodeMark::PatchMark { x, y } => Some([x, y]),
            _ => None,
        }
    }
}

/// L1 gap between two node marks. Non-metric marks are all at distance zero
/// from each other and infinitely far from metric ones.
pub fn mark_gap(a: &NodeMark, b: &NodeMark) -> f64 {
    match (a.point(), b.point()) {
        (Some(p), Some(q)) => (p[0] - q[0]).abs() + (p[1] - q[1]).abs(),
        (None, None) => 0.0,
        _ => f64::INFINITY,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeKind {
    Ring,
    Shortcut,
    Lattice,
}

/// Direction of an edge as seen from the endpoint holding the mark.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Outgoing,
    Incoming,
    Undirected,
}

impl Direction {
    pub fn flipped(self) -> Self {
        match self {
            Direction::Outgoing => Direction::Incoming,
            Direction::Incoming => Direction::Outgoing,
            Direction::Undirected => Direction::Undirected,
        }
    }
}

/// Mark of an edge seen from one endpoint.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EdgeMark {
    pub kind: EdgeKind,
    pub direction: Direction,
    /// Ring distance of a ring edge, or of the ring edge a shortcut replaced.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ring_distance: Option<u16>,
}

impl EdgeMark {
    pub fn ring(direction: Direction, distance: u16) -> Self {
        Self { kind: EdgeKind::Ring, direction, ring_distance: Some(distance) }
    }

    pub fn shortcut(direction: Direction, ring_distance: Option<u16>) -> Self {
        Self { kind: EdgeKind::Shortcut, direction, ring_distance }
    }

    pub fn lattice() -> Self {
        Self { kind: EdgeKind::Lattice, direction: Direction::Undirected, ring_distance: None }
    }

    /// The same edge seen from the other endpoint.
    pub fn flipped(self) -> Self {
        Self { direction: self.direction.flipped(), ..self }
    }

    /// Injective integer encoding, stable across runs.
    pub fn code(self) -> u64 {
        let kind = match self.kind {
            EdgeKind::Ring => 1u64,
            EdgeKind::Shortcut => 2,
            EdgeKind::Lattice => 3,
        };
        let dir = match self.direction {
            Direction::Outgoing => 1u64,
            Direction::Incoming => 2,
            Direction::Undirected => 3,
        };
        let rd = self.ring_distance.map_or(0, |d| d as u64 + 1);
        (kind << 40) | (dir << 32) | rd
    }
}

/// Which exploration priority applies to a graph.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Family {
    /// Ring-based graphs: outgoing shortcuts, outgoing ring, incoming ring, incoming shortcuts.
    Ring,
    /// Lattice-based graphs: lattice edges, incoming shortcuts, outgoing shortcuts.
    Lattice,
    /// No priority; ties fall through to neighbour id.
    Plain,
}

/// Exploration rank of an edge mark; smaller ranks are explored first.
pub(crate) fn exploration_rank(mark: EdgeMark, family: Family) -> u8 {
    use Direction::*;
    use EdgeKind::*;
    match family {
        Family::Ring => match (mark.kind, mark.direction) {
            (Shortcut, Outgoing) => 0,
            (Ring, Outgoing) => 1,
            (Ring, Incoming) => 2,
            (Shortcut, Incoming) => 3,
            _ => 4,
        },
        Family::Lattice => match (mark.kind, mark.direction) {
            (Lattice, _) => 0,
            (Shortcut, Incoming) => 1,
            (Shortcut, Outgoing) => 2,
            _ => 3,
        },
        Family::Plain => 0,
    }
}

/// Model that produced a graph, with its generating parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum ModelTag {
    Ws { n: usize, k: usize, phi: f64 },
    Kleinberg { n: usize, q: usize, k: usize, ell: f64 },
    LimitSample,
    Plain,
}

impl ModelTag {
    pub fn family(&self) -> Family {
        match self {
            ModelTag::Ws { .. } => Family::Ring,
            ModelTag::Kleinberg { .. } => Family::Lattice,
            _ => Family::Plain,
        }
    }

    /// Grid side length of a Kleinberg graph.
    pub fn lattice_side(&self) -> Option<usize> {
        match self {
            ModelTag::Kleinberg { n, .. } => Some(*n),
            _ => None,
        }
    }
}

/// An edge stored once, oriented from the endpoint that created it.
///
/// Lattice edges are stored with `tail < head`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub tail: u32,
    pub head: u32,
    pub kind: EdgeKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ring_distance: Option<u16>,
}

impl Edge {
    pub fn mark_at_tail(&self) -> EdgeMark {
        let direction = match self.kind {
            EdgeKind::Lattice => Direction::Undirected,
            _ => Direction::Outgoing,
        };
        EdgeMark { kind: self.kind, direction, ring_distance: self.ring_distance }
    }

    pub fn mark_at_head(&self) -> EdgeMark {
        self.mark_at_tail().flipped()
    }
}

/// One endpoint's view of an edge.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HalfEdge {
    pub neighbor: u32,
    pub edge: u32,
    pub mark: EdgeMark,
}

/// Immutable marked multigraph in compressed adjacency form.
///
/// Each node's adjacency is sorted by `(neighbor, edge id)`.
#[derive(Clone, Debug, PartialEq)]
pub struct MarkedGraph {
    model: ModelTag,
    seed: u64,
    marks: Vec<NodeMark>,
    edges: Vec<Edge>,
    offsets: Vec<usize>,
    half: Vec<HalfEdge>,
}

impl MarkedGraph {
    /// Builds a graph from its edge list. Self-loops are rejected.
    pub fn from_edges(model: ModelTag, seed: u64, marks: Vec<NodeMark>, edges: Vec<Edge>) -> Result<Self> {
        let n = marks.len();
        if n > u32::MAX as usize {
            return Err(invalid("node count exceeds u32 range"));
        }
        if edges.len() > u32::MAX as usize {
            return Err(invalid("edge count exceeds u32 range"));
        }
        let mut degree = vec![0usize; n + 1];
        for (i, e) in edges.iter().enumerate() {
            let (t, h) = (e.tail as usize, e.head as usize);
            if t >= n || h >= n {
                return Err(invalid(format!("edge {i} references a node outside 0..{n}")));
            }
            if t == h {
                return Err(invalid(format!("edge {i} is a self-loop at node {t}")));
            }
            if e.kind == EdgeKind::Lattice && t > h {
                return Err(invalid(format!("lattice edge {i} must have tail < head")));
            }
            degree[t + 1] += 1;
            degree[h + 1] += 1;
        }
        for i in 0..n {
            degree[i + 1] += degree[i];
        }
        let offsets = degree;
        let mut cursor = offsets.clone();
        let placeholder = HalfEdge { neighbor: 0, edge: 0, mark: EdgeMark::lattice() };
        let mut half = vec![placeholder; 2 * edges.len()];
        for (i, e) in edges.iter().enumerate() {
            let (t, h) = (e.tail as usize, e.head as usize);
            half[cursor[t]] = HalfEdge { neighbor: e.head, edge: i as u32, mark: e.mark_at_tail() };
            cursor[t] += 1;
            half[cursor[h]] = HalfEdge { neighbor: e.tail, edge: i as u32, mark: e.mark_at_head() };
            cursor[h] += 1;
        }
        for v in 0..n {
            half[offsets[v]..offsets[v + 1]].sort_unstable_by_key(|h| (h.neighbor, h.edge));
        }
        Ok(Self { model, seed, marks, edges, offsets, half })
    }

    pub fn model(&self) -> &ModelTag {
        &self.model
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn family(&self) -> Family {
        self.model.family()
    }

    pub fn node_count(&self) -> usize {
        self.marks.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn marks(&self) -> &[NodeMark] {
        &self.marks
    }

    pub fn mark(&self, v: usize) -> NodeMark {
        self.marks[v]
    }

    pub fn neighbors(&self, v: usize) -> &[HalfEdge] {
        &self.half[self.offsets[v]..self.offsets[v + 1]]
    }

    /// Degree counting parallel edges separately.
    pub fn degree(&self, v: usize) -> usize {
        self.offsets[v + 1] - self.offsets[v]
    }

    pub fn shortcut_count(&self) -> usize {
        self.edges.iter().filter(|e| e.kind == EdgeKind::Shortcut).count()
    }

    /// Lattice coordinate `(x, y)` of a node of a Kleinberg graph.
    pub fn coord(&self, v: usize) -> Option<(u32, u32)> {
        match self.marks[v] {
            NodeMark::LatticeCoord { x, y } => Some((x, y)),
            _ => None,
        }
    }

    /// Node mark as it appears inside a rooted neighbourhood: lattice
    /// coordinates are normalized to the unit square, ring indices dropped.
    pub fn ball_mark(&self, v: usize) -> NodeMark {
        match (self.marks[v], self.model.lattice_side()) {
            (NodeMark::LatticeCoord { x, y }, Some(side)) => {
                NodeMark::PatchMark { x: x as f64 / side as f64, y: y as f64 / side as f64 }
            }
            (NodeMark::RingIndex { .. }, _) => NodeMark::None,
            (m, _) => m,
        }
    }

    /// Subgraph on the same nodes keeping the edges selected by `keep`.
    pub fn filter_edges(&self, mut keep: impl FnMut(usize, &Edge) -> bool) -> MarkedGraph {
        let edges: Vec<Edge> = self.edges.iter().enumerate().filter(|(i, e)| keep(*i, e)).map(|(_, e)| *e).collect();
        MarkedGraph::from_edges(self.model.clone(), self.seed, self.marks.clone(), edges)
            .expect("a subset of valid edges is valid")
    }
}

/// How a rooted neighbourhood was cut out of its graph.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BallKind {
    GraphBall,
    LatticeBall,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BallNode {
    /// Identifier in the source graph, or a sequence number for sampled balls.
    pub id: u64,
    /// Graph distance (graph balls) or lattice distance (lattice balls) to the root.
    pub depth: u32,
    pub mark: NodeMark,
}

/// Edge between local positions `a < b`; `mark` is seen from `a`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BallEdge {
    pub a: u32,
    pub b: u32,
    pub mark: EdgeMark,
}

/// A finite rooted marked graph.
///
/// Local positions follow the exploration order, so `nodes[0]` is the root.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RootedNeighborhood {
    pub root: u64,
    pub radius: u32,
    pub ball_kind: BallKind,
    pub nodes: Vec<BallNode>,
    pub edges: Vec<BallEdge>,
}

impl RootedNeighborhood {
    /// Assembles a neighbourhood, orienting each edge from its lower position
    /// and sorting the edge list.
    pub fn new(
        radius: u32,
        ball_kind: BallKind,
        nodes: Vec<BallNode>,
        edges: impl IntoIterator<Item = (u32, u32, EdgeMark)>,
    ) -> Self {
        let mut edges: Vec<BallEdge> = edges
            .into_iter()
            .map(|(a, b, mark)| {
                debug_assert_ne!(a, b);
                if a < b {
                    BallEdge { a, b, mark }
                } else {
                    BallEdge { a: b, b: a, mark: mark.flipped() }
                }
            })
            .collect();
        edges.sort_by_key(|e| (e.a, e.b, e.mark));
        let root = nodes.first().map_or(0, |n| n.id);
        Self { root, radius, ball_kind, nodes, edges }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Source identifiers in exploration order.
    pub fn order(&self) -> Vec<u64> {
        self.nodes.iter().map(|n| n.id).collect()
    }

    /// Local adjacency lists with marks seen from each node.
    pub fn adjacency(&self) -> Vec<Vec<(u32, EdgeMark)>> {
        let mut adj = vec![Vec::new(); self.nodes.len()];
        for e in &self.edges {
            adj[e.a as usize].push((e.b, e.mark));
            adj[e.b as usize].push((e.a, e.mark.flipped()));
        }
        adj
    }

    pub fn root_degree(&self) -> usize {
        self.edges.iter().filter(|e| e.a == 0).count()
    }

    /// Restriction to the nodes of depth at most `r`, with their induced edges.
    pub fn truncate(&self, r: u32) -> Self {
        let keep: Vec<bool> = self.nodes.iter().map(|n| n.depth <= r).collect();
        let mut remap = vec![u32::MAX; self.nodes.len()];
        let mut nodes = Vec::new();
        for (i, n) in self.nodes.iter().enumerate() {
            if keep[i] {
                remap[i] = nodes.len() as u32;
                nodes.push(*n);
            }
        }
        let edges = self
            .edges
            .iter()
            .filter(|e| keep[e.a as usize] && keep[e.b as usize])
            .map(|e| (remap[e.a as usize], remap[e.b as usize], e.mark));
        let mut out = Self::new(r.min(self.radius), self.ball_kind, nodes, edges);
        out.root = self.root;
        out
    }
}
