use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::limit_samplers::lambda_m;
use crate::marked_graph::MarkedGraph;
use crate::rng::{domain, KeyedRng};

/// Clustering of the simple support of a graph: parallel edges count once.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusteringResult {
    /// `Δ(v) / (d_v (d_v − 1))` per node, `None` where `d_v < 2`.
    pub local_values: Vec<Option<f64>>,
    /// `Σ Δ(v) / Σ d_v (d_v − 1)` over nodes with `d_v >= 2`.
    pub global_value: f64,
    pub triangle_total: u64,
}

impl ClusteringResult {
    /// Average of the defined local values.
    pub fn mean_local(&self) -> f64 {
        let defined: Vec<f64> = self.local_values.iter().flatten().copied().collect();
        if defined.is_empty() {
            0.0
        } else {
            defined.iter().sum::<f64>() / defined.len() as f64
        }
    }
}

/// Sorted distinct neighbour lists.
pub(crate) fn simple_adjacency(g: &MarkedGraph) -> Vec<Vec<u32>> {
    (0..g.node_count())
        .into_par_iter()
        .map(|v| {
            let mut nb: Vec<u32> = g.neighbors(v).iter().map(|h| h.neighbor).collect();
            nb.dedup();
            nb
        })
        .collect()
}

fn sorted_intersection(a: &[u32], b: &[u32]) -> u64 {
    let (mut i, mut j, mut c) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                c += 1;
                i += 1;
                j += 1;
            }
        }
    }
    c
}

/// Exact triangle counts by sorted-list intersection.
///
/// `Δ(v) = Σ_{u ~ v} |N(v) ∩ N(u)|` counts every triangle at `v` twice,
/// once per orientation.
pub fn clustering(g: &MarkedGraph) -> ClusteringResult {
    let adj = simple_adjacency(g);
    let delta: Vec<u64> = (0..adj.len())
        .into_par_iter()
        .map(|v| adj[v].iter().map(|&u| sorted_intersection(&adj[v], &adj[u as usize])).sum())
        .collect();
    let mut num = 0u64;
    let mut den = 0u64;
    let local_values = adj
        .iter()
        .zip(&delta)
        .map(|(nb, &d)| {
            let deg = nb.len() as u64;
            (deg >= 2).then(|| {
                num += d;
                den += deg * (deg - 1);
                d as f64 / (deg * (deg - 1)) as f64
            })
        })
        .collect();
    ClusteringResult {
        local_values,
        global_value: if den == 0 { 0.0 } else { num as f64 / den as f64 },
        triangle_total: delta.iter().sum::<u64>() / 6,
    }
}

/// Limit of the global clustering of WS(n, φ, k):
/// `3(k−1) / (2(2k−1) + φ(2−φ)) · (1−φ)³`.
pub fn ws_clustering_limit(k: usize, phi: f64) -> Result<f64> {
    if k == 0 || !(0.0..=1.0).contains(&phi) {
        return Err(invalid(format!("need k >= 1 and phi in [0, 1], got k={k}, phi={phi}")));
    }
    let k = k as f64;
    Ok(3.0 * (k - 1.0) / (2.0 * (2.0 * k - 1.0) + phi * (2.0 - phi)) * (1.0 - phi).powi(3))
}

/// Twice the number of triangles through the origin of the infinite
/// k-lattice, counted in the window `[-h, h]²`.
pub fn triangle_count_lattice_window(k: usize, half_width: usize) -> u64 {
    let (k, h) = (k as i64, half_width as i64);
    let neighbours: Vec<(i64, i64)> = (-h..=h)
        .flat_map(|y| (-h..=h).map(move |x| (x, y)))
        .filter(|&(x, y)| (x, y) != (0, 0) && x.abs() + y.abs() <= k)
        .collect();
    let mut count = 0;
    for a in &neighbours {
        for b in &neighbours {
            if a != b && (a.0 - b.0).abs() + (a.1 - b.1).abs() <= k {
                count += 1;
            }
        }
    }
    count
}

/// `Δ_{L_k}`: every triangle through the root lies within L1 distance `k`,
/// so the `(4k+1)²` window is exhaustive.
pub fn triangle_count_lattice(k: usize) -> u64 {
    triangle_count_lattice_window(k, 2 * k)
}

/// Monte-Carlo limit of the global clustering of Kleinberg graphs, `ell < 2`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusteringLimit {
    /// `Δ_{L_k} / E_m[(c + Λ_m)² − c]` with `c = 2k(k+1) + q`.
    pub value: f64,
    pub std_error: f64,
    /// `E_m[Δ_{L_k} / ((c + Λ_m)² − c)]`, the pointwise expression averaged over marks.
    pub pointwise_mean: f64,
    pub lattice_triangles: u64,
    pub samples: usize,
}

/// Limit of the global clustering of K(n, q, k, ell) for `ell < 2`.
///
/// The root degree is `c + Poisson(Λ_m)` with a uniform mark `m`, so
/// `E[d(d−1) | m] = (c + Λ_m)² − c`; shortcuts close no triangles in the limit.
pub fn kleinberg_clustering_limit(
    q: usize,
    k: usize,
    ell: f64,
    mc_samples: usize,
    quad_tol: f64,
    seed: u64,
) -> Result<ClusteringLimit> {
    if !(ell.is_finite() && (0.0..2.0).contains(&ell)) {
        return Err(Error::Domain(format!("clustering limit needs 0 <= ell < 2, got {ell}")));
    }
    if k == 0 || mc_samples == 0 {
        return Err(invalid("need k >= 1 and at least one Monte-Carlo sample"));
    }
    let delta = triangle_count_lattice(k);
    let c = (2 * k * (k + 1) + q) as f64;
    let dens: Vec<f64> = (0..mc_samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = KeyedRng::stream(seed, &[domain::MONTE_CARLO, i as u64]);
            let m = [rng.random::<f64>(), rng.random::<f64>()];
            let lam = lambda_m(m, ell, q, quad_tol)?;
            Ok((c + lam) * (c + lam) - c)
        })
        .collect::<Result<_>>()?;
    let n = dens.len() as f64;
    let mean = dens.iter().sum::<f64>() / n;
    let var = if dens.len() > 1 { dens.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
    let value = delta as f64 / mean;
    Ok(ClusteringLimit {
        value,
        std_error: value * (var / n).sqrt() / mean,
        pointwise_mean: dens.iter().map(|d| delta as f64 / d).sum::<f64>() / n,
        lattice_triangles: delta,
        samples: mc_samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{generate_ws, WsParams};
    use crate::marked_graph::{Edge, EdgeKind, ModelTag, NodeMark};

    fn plain(n: usize, pairs: &[(u32, u32)]) -> MarkedGraph {
        let edges = pairs
            .iter()
            .map(|&(a, b)| Edge { tail: a, head: b, kind: EdgeKind::Shortcut, ring_distance: None })
            .collect();
        MarkedGraph::from_edges(ModelTag::Plain, 0, vec![NodeMark::None; n], edges).unwrap()
    }

    #[test]
    fn small_graphs() {
        let tri = clustering(&plain(3, &[(0, 1), (1, 2), (2, 0)]));
        assert_eq!(tri.global_value, 1.0);
        assert!(tri.local_values.iter().all(|v| *v == Some(1.0)));
        assert_eq!(tri.triangle_total, 1);
        let square = clustering(&plain(4, &[(0, 1), (1, 2), (2, 3), (3, 0)]));
        assert_eq!(square.global_value, 0.0);
        // a doubled edge does not change the simple support
        let doubled = clustering(&plain(3, &[(0, 1), (1, 0), (1, 2), (2, 0)]));
        assert_eq!(doubled.global_value, 1.0);
        let path = clustering(&plain(3, &[(0, 1), (1, 2)]));
        assert_eq!(path.local_values, vec![None, Some(0.0), None]);
    }

    #[test]
    fn unrewired_rings_match_the_limit_exactly() {
        for k in 1..=4 {
            let g = generate_ws(&WsParams { n: 200, k, phi: 0.0, seed: 0 }).unwrap();
            let c = clustering(&g);
            assert!((c.global_value - ws_clustering_limit(k, 0.0).unwrap()).abs() < 1e-15, "k={k}");
        }
        assert_eq!(ws_clustering_limit(2, 0.0).unwrap(), 0.5);
    }

    #[test]
    fn formula_values() {
        assert_eq!(ws_clustering_limit(1, 0.37).unwrap(), 0.0);
        assert!((ws_clustering_limit(3, 0.1).unwrap() - 6.0 / 10.19 * 0.729).abs() < 1e-15);
        assert!((ws_clustering_limit(3, 0.1).unwrap() - 0.4292444).abs() < 1e-7);
        assert!(ws_clustering_limit(0, 0.1).is_err());
    }

    #[test]
    fn lattice_triangles() {
        assert_eq!(triangle_count_lattice(1), 0);
        // k = 2: the 12 neighbours of the root, ordered pairs within distance 2
        assert_eq!(triangle_count_lattice(2), 60);
        for k in 1..=4 {
            assert_eq!(triangle_count_lattice(k), triangle_count_lattice_window(k, 3 * k));
        }
    }

    #[test]
    fn kleinberg_limit_properties() {
        let r = kleinberg_clustering_limit(1, 1, 1.0, 4, 1e-4, 0).unwrap();
        assert_eq!(r.value, 0.0);
        let a = kleinberg_clustering_limit(1, 2, 1.0, 16, 1e-4, 3).unwrap();
        let b = kleinberg_clustering_limit(3, 2, 1.0, 16, 1e-4, 3).unwrap();
        assert!(a.value > b.value && b.value > 0.0);
        assert!(matches!(kleinberg_clustering_limit(1, 2, 2.0, 16, 1e-4, 3), Err(Error::Domain(_))));
    }
}
