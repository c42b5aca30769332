use rayon::prelude::*;

use crate::error::{invalid, Result};
use crate::marked_graph::MarkedGraph;

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(invalid(format!("damping must lie in (0, 1), got {alpha}")));
    }
    Ok(())
}

/// PageRank of the simple random walk on `g` with damping `alpha`.
///
/// Each iteration is a parallel pull over nodes. Parallel edges weight the
/// walk by multiplicity and isolated nodes teleport uniformly. Iteration stops
/// once the L1 change between successive iterates drops below `tol`.
pub fn pagerank_full(g: &MarkedGraph, alpha: f64, tol: f64) -> Result<Vec<f64>> {
    check_alpha(alpha)?;
    if !(tol > 0.0) {
        return Err(invalid(format!("tolerance must be positive, got {tol}")));
    }
    let n = g.node_count();
    if n == 0 {
        return Ok(vec![]);
    }
    let inv_deg: Vec<f64> = (0..n).map(|v| if g.degree(v) > 0 { 1.0 / g.degree(v) as f64 } else { 0.0 }).collect();
    let mut x = vec![1.0 / n as f64; n];
    loop {
        let sink: f64 = (0..n).filter(|&v| g.degree(v) == 0).map(|v| x[v]).sum();
        let base = (1.0 - alpha) / n as f64 + alpha * sink / n as f64;
        let next: Vec<f64> = (0..n)
            .into_par_iter()
            .map(|v| {
                base + alpha
                    * g.neighbors(v).iter().map(|h| x[h.neighbor as usize] * inv_deg[h.neighbor as usize]).sum::<f64>()
            })
            .collect();
        let change: f64 = next.iter().zip(&x).map(|(a, b)| (a - b).abs()).sum();
        x = next;
        if change < tol {
            return Ok(x);
        }
    }
}

/// PageRank of `v` from the radius-`r` ball around it.
///
/// With `s_t = Σ_u P^t(u, v)`, the full value is `(1−α)/n · Σ_t α^t s_t`.
/// Terms up to `t = r` only see `B_r(v)` and are exact; the remainder is
/// completed with `s_t ≈ s_r`, so the error is at most `α^{r+1}` because
/// every `s_t` lies in `[0, n]`. Isolated nodes inside the ball are treated
/// as absorbing, which is exact when `g` has none.
pub fn pagerank_local(g: &MarkedGraph, v: usize, alpha: f64, r: u32) -> Result<f64> {
    check_alpha(alpha)?;
    let n = g.node_count();
    if v >= n {
        return Err(invalid(format!("node {v} outside 0..{n}")));
    }
    // y_t(u) = P^t(u, v), supported on the nodes within distance t of v.
    let mut y = vec![0.0f64; n];
    let mut next = vec![0.0f64; n];
    let mut in_support = vec![false; n];
    let mut support = vec![v as u32];
    in_support[v] = true;
    y[v] = 1.0;
    let mut total = 1.0;
    let mut s_t = 1.0;
    let mut weight = 1.0;
    for _ in 0..r {
        let frontier_len = support.len();
        for i in 0..frontier_len {
            for h in g.neighbors(support[i] as usize) {
                let u = h.neighbor as usize;
                if !in_support[u] {
                    in_support[u] = true;
                    support.push(u as u32);
                }
            }
        }
        s_t = 0.0;
        for &u in &support {
            let u = u as usize;
            let deg = g.degree(u);
            let val = if deg == 0 {
                0.0
            } else {
                g.neighbors(u).iter().map(|h| y[h.neighbor as usize]).sum::<f64>() / deg as f64
            };
            next[u] = val;
            s_t += val;
        }
        for &u in &support {
            y[u as usize] = next[u as usize];
        }
        weight *= alpha;
        total += weight * s_t;
    }
    total += weight * alpha * s_t / (1.0 - alpha);
    Ok((1.0 - alpha) / n as f64 * total)
}
