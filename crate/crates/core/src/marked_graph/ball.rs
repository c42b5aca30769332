use std::collections::HashMap;

use super::{exploration_rank, BallKind, BallNode, HalfEdge, MarkedGraph, ModelTag, RootedNeighborhood};
use crate::error::{invalid, Error, Result};

/// Rooted ball of graph radius `r` around `root`, explored breadth-first.
///
/// Neighbours of a node are visited by exploration rank of the connecting
/// edge, then by ring distance, then by neighbour id. On a Kleinberg grid the
/// id order is row-major, so it coincides with "smaller y first, then smaller
/// x". The ball is the induced subgraph on all nodes within distance `r`.
pub fn graph_ball(g: &MarkedGraph, root: usize, r: u32) -> Result<RootedNeighborhood> {
    if root >= g.node_count() {
        return Err(invalid(format!("root {root} outside 0..{}", g.node_count())));
    }
    let family = g.family();
    let mut local: HashMap<u32, u32> = HashMap::new();
    let mut ids: Vec<u32> = vec![root as u32];
    let mut depth: Vec<u32> = vec![0];
    local.insert(root as u32, 0);
    let mut scratch: Vec<HalfEdge> = Vec::new();
    let mut head = 0;
    while head < ids.len() {
        let (v, dv) = (ids[head], depth[head]);
        head += 1;
        if dv >= r {
            break;
        }
        scratch.clear();
        scratch.extend_from_slice(g.neighbors(v as usize));
        scratch
            .sort_by_key(|h| (exploration_rank(h.mark, family), h.mark.ring_distance.unwrap_or(0), h.neighbor, h.edge));
        for h in &scratch {
            if let std::collections::hash_map::Entry::Vacant(slot) = local.entry(h.neighbor) {
                slot.insert(ids.len() as u32);
                ids.push(h.neighbor);
                depth.push(dv + 1);
            }
        }
    }
    Ok(induced(g, r, BallKind::GraphBall, &ids, &depth, &local))
}

/// Rooted ball of lattice (L1) radius `r` around `root` in a Kleinberg graph.
///
/// The root comes first; the other nodes follow in row-major order. All edges
/// with both endpoints inside are kept, shortcuts included.
pub fn lattice_ball(g: &MarkedGraph, root: usize, r: u32) -> Result<RootedNeighborhood> {
    let side = match g.model() {
        ModelTag::Kleinberg { n, .. } => *n as i64,
        other => return Err(Error::Unsupported(format!("lattice ball needs a Kleinberg graph, got {other:?}"))),
    };
    if root >= g.node_count() {
        return Err(invalid(format!("root {root} outside 0..{}", g.node_count())));
    }
    let (rx, ry) = (root as i64 % side, root as i64 / side);
    let r = r as i64;
    let mut ids = vec![root as u32];
    let mut depth = vec![0u32];
    for y in (ry - r).max(0)..=(ry + r).min(side - 1) {
        let span = r - (y - ry).abs();
        for x in (rx - span).max(0)..=(rx + span).min(side - 1) {
            if (x, y) != (rx, ry) {
                ids.push((y * side + x) as u32);
                depth.push(((x - rx).abs() + (y - ry).abs()) as u32);
            }
        }
    }
    let local: HashMap<u32, u32> = ids.iter().enumerate().map(|(i, &v)| (v, i as u32)).collect();
    Ok(induced(g, r as u32, BallKind::LatticeBall, &ids, &depth, &local))
}

fn induced(
    g: &MarkedGraph,
    r: u32,
    kind: BallKind,
    ids: &[u32],
    depth: &[u32],
    local: &HashMap<u32, u32>,
) -> RootedNeighborhood {
    let nodes = ids
        .iter()
        .zip(depth)
        .map(|(&v, &d)| BallNode { id: v as u64, depth: d, mark: g.ball_mark(v as usize) })
        .collect();
    let mut edges = Vec::new();
    for (i, &v) in ids.iter().enumerate() {
        for h in g.neighbors(v as usize) {
            if let Some(&j) = local.get(&h.neighbor) {
                if (i as u32) < j {
                    edges.push((i as u32, j, h.mark));
                }
            }
        }
    }
    RootedNeighborhood::new(r, kind, nodes, edges)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{generate_kleinberg, generate_ws, KleinbergParams, WsParams};
    use crate::marked_graph::{Direction, EdgeKind, EdgeMark};

    #[test]
    fn unrewired_one_ring_gives_a_three_path() {
        let g = generate_ws(&WsParams { n: 10, k: 1, phi: 0.0, seed: 1 }).unwrap();
        let b = graph_ball(&g, 4, 1).unwrap();
        assert_eq!(b.len(), 3);
        assert_eq!(b.edges.len(), 2);
        assert_eq!(b.root_degree(), 2);
        // outgoing ring edge is explored before the incoming one
        assert_eq!(b.order(), vec![4, 5, 3]);
    }

    #[test]
    fn radius_zero_is_the_bare_root() {
        let g = generate_ws(&WsParams { n: 10, k: 2, phi: 0.5, seed: 3 }).unwrap();
        let b = graph_ball(&g, 7, 0).unwrap();
        assert_eq!(b.len(), 1);
        assert!(b.edges.is_empty());
        assert!(graph_ball(&g, 10, 1).is_err());
    }

    #[test]
    fn two_ring_root_sees_all_four_ring_marks() {
        let g = generate_ws(&WsParams { n: 12, k: 2, phi: 0.0, seed: 1 }).unwrap();
        let b = graph_ball(&g, 5, 1).unwrap();
        assert_eq!(b.len(), 5);
        let mut root_marks: Vec<EdgeMark> = b.edges.iter().filter(|e| e.a == 0).map(|e| e.mark).collect();
        root_marks.sort();
        let mut want = vec![
            EdgeMark::ring(Direction::Outgoing, 1),
            EdgeMark::ring(Direction::Outgoing, 2),
            EdgeMark::ring(Direction::Incoming, 1),
            EdgeMark::ring(Direction::Incoming, 2),
        ];
        want.sort();
        assert_eq!(root_marks, want);
        // 3-4, 4-6 and 6-7 join depth-one nodes
        assert_eq!(b.edges.len(), 7);
        assert_eq!(b.order(), vec![5, 6, 7, 4, 3]);
    }

    #[test]
    fn lattice_balls_clip_at_the_boundary() {
        let p = KleinbergParams { n: 9, q: 0, k: 1, ell: 2.0, seed: 1 };
        let g = generate_kleinberg(&p).unwrap();
        assert_eq!(lattice_ball(&g, 40, 0).unwrap().len(), 1);
        let b = lattice_ball(&g, 40, 1).unwrap();
        assert_eq!((b.len(), b.edges.len()), (5, 4));
        assert!(b.edges.iter().all(|e| e.mark.kind == EdgeKind::Lattice));
        assert_eq!(b.order(), vec![40, 31, 39, 41, 49]);
        assert_eq!(lattice_ball(&g, 0, 1).unwrap().len(), 3);
        let ws = generate_ws(&WsParams { n: 10, k: 1, phi: 0.0, seed: 1 }).unwrap();
        assert!(matches!(lattice_ball(&ws, 0, 1), Err(Error::Unsupported(_))));
    }

    #[test]
    fn kleinberg_exploration_prefers_lattice_then_incoming() {
        let p = KleinbergParams { n: 16, q: 2, k: 1, ell: 1.0, seed: 9 };
        let g = generate_kleinberg(&p).unwrap();
        let b = graph_ball(&g, 100, 1).unwrap();
        let adj = b.adjacency();
        let rank = |m: EdgeMark| match (m.kind, m.direction) {
            (EdgeKind::Lattice, _) => 0,
            (_, Direction::Incoming) => 1,
            _ => 2,
        };
        // first-discovery rank of each depth-one node is nondecreasing
        let ranks: Vec<u8> = (1..b.len())
            .map(|i| adj[i].iter().filter(|(j, _)| *j == 0).map(|(_, m)| rank(m.flipped())).min().unwrap())
            .collect();
        assert!(ranks.windows(2).all(|w| w[0] <= w[1]), "{ranks:?}");
    }
}
