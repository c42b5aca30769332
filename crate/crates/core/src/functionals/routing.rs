use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::generators::{generate_kleinberg, KleinbergParams};
use crate::marked_graph::MarkedGraph;
use crate::rng::{derive, domain, KeyedRng};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RouteResult {
    pub hops: usize,
    pub reached: bool,
    /// Visited nodes from source to the last node reached; `hops + 1` entries.
    pub path: Vec<u32>,
}

/// Greedy decentralized routing on a Kleinberg graph.
///
/// Each step moves to the neighbour closest to `t` in L1 distance, smallest
/// id first among ties, and stops when no neighbour is strictly closer.
/// Lattice edges always offer a closer neighbour, so every route arrives.
pub fn greedy_route(g: &MarkedGraph, s: usize, t: usize) -> Result<RouteResult> {
    if g.model().lattice_side().is_none() {
        return Err(Error::Unsupported("greedy routing needs a Kleinberg graph".into()));
    }
    let n = g.node_count();
    if s >= n || t >= n {
        return Err(invalid(format!("route endpoints ({s}, {t}) outside 0..{n}")));
    }
    let target = g.coord(t).expect("lattice node");
    let dist = |v: usize| {
        let c = g.coord(v).expect("lattice node");
        c.0.abs_diff(target.0) + c.1.abs_diff(target.1)
    };
    let mut path = vec![s as u32];
    let mut cur = s;
    let mut cur_dist = dist(s);
    while cur != t {
        // neighbours are sorted by id, so the first minimum is the smallest id
        let best = g.neighbors(cur).iter().map(|h| (dist(h.neighbor as usize), h.neighbor)).min();
        match best {
            Some((d, v)) if d < cur_dist => {
                cur = v as usize;
                cur_dist = d;
                path.push(v);
            }
            _ => return Ok(RouteResult { hops: path.len() - 1, reached: false, path }),
        }
    }
    Ok(RouteResult { hops: path.len() - 1, reached: true, path })
}

/// Mean greedy delivery time of one `(n, ell)` cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub n: usize,
    pub ell: f64,
    pub trials: usize,
    pub mean_hops: f64,
    pub std_error: f64,
}

/// Greedy delivery times over the grid `ns × ells`.
///
/// Every cell draws its own graph and `trials` uniform source/target pairs
/// from streams keyed by the cell, so rows do not depend on the grid shape.
pub fn delivery_time_sweep(
    ns: &[usize],
    ells: &[f64],
    q: usize,
    k: usize,
    trials: usize,
    seed: u64,
) -> Result<Vec<SweepRow>> {
    if trials == 0 {
        return Ok(vec![]);
    }
    let cells: Vec<(usize, f64)> = ns.iter().flat_map(|&n| ells.iter().map(move |&l| (n, l))).collect();
    cells
        .into_par_iter()
        .map(|(n, ell)| {
            let cell_key = derive(seed, &[domain::ROUTING, n as u64, ell.to_bits()]);
            let g = generate_kleinberg(&KleinbergParams { n, q, k, ell, seed: cell_key })?;
            let nodes = n * n;
            let hops: Vec<f64> = (0..trials)
                .into_par_iter()
                .map(|i| {
                    let mut rng = KeyedRng::stream(cell_key, &[domain::ROUTING, i as u64]);
                    let (s, t) = (rng.random_range(0..nodes), rng.random_range(0..nodes));
                    let route = greedy_route(&g, s, t)?;
                    assert!(route.reached, "lattice edges guarantee delivery");
                    Ok(route.hops as f64)
                })
                .collect::<Result<_>>()?;
            let m = hops.len() as f64;
            let mean = hops.iter().sum::<f64>() / m;
            let var =
                if hops.len() > 1 { hops.iter().map(|h| (h - mean).powi(2)).sum::<f64>() / (m - 1.0) } else { 0.0 };
            Ok(SweepRow { n, ell, trials, mean_hops: mean, std_error: (var / m).sqrt() })
        })
        .collect()
}

/// For each `n` in the table, the `ell` with the smallest mean hop count.
pub fn sweep_minimizers(rows: &[SweepRow]) -> Vec<(usize, f64)> {
    let mut ns: Vec<usize> = rows.iter().map(|r| r.n).collect();
    ns.dedup();
    ns.sort_unstable();
    ns.dedup();
    ns.into_iter()
        .filter_map(|n| {
            rows.iter().filter(|r| r.n == n).min_by(|a, b| a.mean_hops.total_cmp(&b.mean_hops)).map(|r| (n, r.ell))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{generate_ws, WsParams};

    #[test]
    fn lattice_routes_follow_distance() {
        let g = generate_kleinberg(&KleinbergParams { n: 12, q: 0, k: 1, ell: 2.0, seed: 0 }).unwrap();
        for (s, t) in [(0, 143), (5, 77), (100, 3), (9, 9)] {
            let r = greedy_route(&g, s, t).unwrap();
            let (a, b) = (g.coord(s).unwrap(), g.coord(t).unwrap());
            assert!(r.reached);
            assert_eq!(r.hops as u32, a.0.abs_diff(b.0) + a.1.abs_diff(b.1));
            assert_eq!(r.path.len(), r.hops + 1);
        }
    }

    #[test]
    fn paths_are_adjacent_steps() {
        let g = generate_kleinberg(&KleinbergParams { n: 30, q: 1, k: 1, ell: 2.0, seed: 4 }).unwrap();
        let r = greedy_route(&g, 17, 812).unwrap();
        assert!(r.reached);
        for w in r.path.windows(2) {
            assert!(g.neighbors(w[0] as usize).iter().any(|h| h.neighbor == w[1]));
        }
        assert!(greedy_route(&g, 0, 900).is_err());
        let ws = generate_ws(&WsParams { n: 10, k: 1, phi: 0.0, seed: 0 }).unwrap();
        assert!(matches!(greedy_route(&ws, 0, 1), Err(Error::Unsupported(_))));
    }

    #[test]
    fn sweep_shapes() {
        assert!(delivery_time_sweep(&[8], &[2.0], 1, 1, 0, 1).unwrap().is_empty());
        let rows = delivery_time_sweep(&[8, 12], &[0.0, 2.0], 1, 1, 20, 1).unwrap();
        assert_eq!(rows.len(), 4);
        assert_eq!(rows, delivery_time_sweep(&[8, 12], &[0.0, 2.0], 1, 1, 20, 1).unwrap());
        let single = delivery_time_sweep(&[12], &[2.0], 1, 1, 20, 1).unwrap();
        assert_eq!(single[0], rows[3]);
        assert_eq!(sweep_minimizers(&rows).len(), 2);
    }
}
