use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::marked_graph::{Edge, EdgeKind, MarkedGraph, ModelTag, NodeMark};
use crate::rng::{domain, KeyedRng};

/// Parameters of a Kleinberg graph on the `n × n` grid.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KleinbergParams {
    /// Grid side; the graph has `n²` nodes.
    pub n: usize,
    /// Shortcuts drawn by each node.
    pub q: usize,
    /// Lattice range: nodes within L1 distance `k` are joined.
    pub k: usize,
    /// Shortcut decay exponent.
    pub ell: f64,
    pub seed: u64,
}

impl KleinbergParams {
    pub fn validate(&self) -> Result<()> {
        if self.n < 2 || self.n.checked_mul(self.n).is_none_or(|m| m > u32::MAX as usize) {
            return Err(invalid(format!("grid side must be at least 2 and n² must fit in u32, got {}", self.n)));
        }
        if self.k == 0 {
            return Err(invalid("lattice range k must be at least 1"));
        }
        if !(self.ell.is_finite() && self.ell >= 0.0) {
            return Err(invalid(format!("ell must be finite and nonnegative, got {}", self.ell)));
        }
        Ok(())
    }

    fn check_coord(&self, u: (usize, usize)) -> Result<()> {
        if u.0 >= self.n || u.1 >= self.n {
            return Err(invalid(format!("coordinate {u:?} outside the {0}x{0} grid", self.n)));
        }
        Ok(())
    }
}

/// Number of grid points of `[0, n)²` at exact L1 distance `d` from `u`.
///
/// The diamond `|dx| + |dy| = d` is split into its upper arc (`dy ≥ 0`) and
/// lower arc (`dy < 0`); on each arc the admissible `dx` form two intervals,
/// one per sign, clipped against the rectangle.
pub fn diamond_count(n: usize, u: (usize, usize), d: usize) -> usize {
    if d == 0 {
        return usize::from(u.0 < n && u.1 < n);
    }
    let (n, x, y, d) = (n as i64, u.0 as i64, u.1 as i64, d as i64);
    let (right, left, up, down) = (n - 1 - x, x, n - 1 - y, y);
    let span = |lo: i64, hi: i64| (hi - lo + 1).max(0);
    let upper = span((d - up).max(0), right.min(d)) + span((d - up).max(1), left.min(d));
    let lower = span((d - down).max(0), right.min(d - 1)) + span((d - down).max(1), left.min(d - 1));
    (upper + lower) as usize
}

/// The `t`-th of the `4d` lattice points at L1 distance `d ≥ 1` from the origin.
pub fn diamond_point(d: i64, t: i64) -> (i64, i64) {
    let (side, j) = (t / d, t % d);
    match side {
        0 => (d - j, j),
        1 => (-j, d - j),
        2 => (-d + j, -j),
        _ => (j, -d + j),
    }
}

fn powers(ell: f64, max_d: usize) -> Vec<f64> {
    (0..=max_d).map(|d| if d == 0 { 0.0 } else { (d as f64).powf(-ell) }).collect()
}

fn denominator_with(n: usize, u: (usize, usize), pw: &[f64]) -> f64 {
    (1..=2 * (n - 1)).map(|d| diamond_count(n, u, d) as f64 * pw[d]).sum()
}

/// Normalizer `Σ_{v≠u} d(u,v)^-ell` of the shortcut law at `u`, summed by shell.
pub fn out_denominator(p: &KleinbergParams, u: (usize, usize)) -> Result<f64> {
    p.validate()?;
    p.check_coord(u)?;
    Ok(denominator_with(p.n, u, &powers(p.ell, 2 * (p.n - 1))))
}

/// Normalizers of all nodes, indexed by node id `y·n + x`.
pub fn out_denominators(p: &KleinbergParams) -> Result<Vec<f64>> {
    p.validate()?;
    let pw = powers(p.ell, 2 * (p.n - 1));
    Ok((0..p.n * p.n).into_par_iter().map(|id| denominator_with(p.n, (id % p.n, id / p.n), &pw)).collect())
}

/// Expected number of shortcuts arriving at `u`: `q Σ_{w≠u} d(w,u)^-ell / D_w`.
pub fn incoming_rate(p: &KleinbergParams, u: (usize, usize)) -> Result<f64> {
    p.check_coord(u)?;
    let den = out_denominators(p)?;
    let pw = powers(p.ell, 2 * (p.n - 1));
    Ok(rate_at(p, u, &den, &pw))
}

/// Expected incoming shortcut counts of all nodes, indexed by node id.
pub fn incoming_rates(p: &KleinbergParams) -> Result<Vec<f64>> {
    let den = out_denominators(p)?;
    let pw = powers(p.ell, 2 * (p.n - 1));
    Ok((0..p.n * p.n).into_par_iter().map(|id| rate_at(p, (id % p.n, id / p.n), &den, &pw)).collect())
}

fn rate_at(p: &KleinbergParams, u: (usize, usize), den: &[f64], pw: &[f64]) -> f64 {
    let n = p.n;
    let mut total = 0.0;
    for wy in 0..n {
        for wx in 0..n {
            let d = wx.abs_diff(u.0) + wy.abs_diff(u.1);
            if d > 0 {
                total += pw[d] / den[wy * n + wx];
            }
        }
    }
    p.q as f64 * total
}

/// Inverse-CDF table for the shell index of a shortcut before clipping:
/// `P(d) ∝ 4d · d^-ell` for `d = 1..=2(n-1)`.
struct ShellTable {
    cumulative: Vec<f64>,
}

impl ShellTable {
    fn new(n: usize, ell: f64) -> Self {
        let mut acc = 0.0;
        let cumulative = (1..=2 * (n - 1))
            .map(|d| {
                acc += 4.0 * d as f64 * (d as f64).powf(-ell);
                acc
            })
            .collect();
        Self { cumulative }
    }

    fn sample(&self, rng: &mut impl Rng) -> i64 {
        let total = *self.cumulative.last().expect("grid side is at least 2");
        let u = rng.random::<f64>() * total;
        let idx = self.cumulative.partition_point(|&c| c <= u).min(self.cumulative.len() - 1);
        idx as i64 + 1
    }
}

/// Samples K(n, q, k, ell).
///
/// Lattice edges join all pairs within L1 distance `k`. Each node then draws
/// `q` shortcut heads independently with probability `d(u,v)^-ell / D_u`,
/// by drawing a shell from [`ShellTable`], a uniform point on the full
/// diamond, and retrying when that point falls off the grid.
pub fn generate_kleinberg(p: &KleinbergParams) -> Result<MarkedGraph> {
    p.validate()?;
    let (n, k, q) = (p.n as i64, p.k as i64, p.q);
    let mut edges = Vec::new();
    for y in 0..n {
        for x in 0..n {
            let u = (y * n + x) as u32;
            for dy in 0..=k {
                for dx in -k..=k {
                    let forward = dy > 0 || dx > 0;
                    let (vx, vy) = (x + dx, y + dy);
                    if forward && dx.abs() + dy <= k && (0..n).contains(&vx) && vy < n {
                        let v = (vy * n + vx) as u32;
                        edges.push(Edge { tail: u, head: v, kind: EdgeKind::Lattice, ring_distance: None });
                    }
                }
            }
        }
    }
    if q > 0 {
        let table = ShellTable::new(p.n, p.ell);
        let blank = Edge { tail: 0, head: 0, kind: EdgeKind::Shortcut, ring_distance: None };
        let mut shortcuts = vec![blank; p.n * p.n * q];
        shortcuts.par_chunks_mut(q).enumerate().for_each(|(id, slots)| {
            let mut rng = KeyedRng::stream(p.seed, &[domain::KLEINBERG_SHORTCUT, id as u64]);
            let (x, y) = (id as i64 % n, id as i64 / n);
            for slot in slots.iter_mut() {
                let head = loop {
                    let d = table.sample(&mut rng);
                    let (dx, dy) = diamond_point(d, rng.random_range(0..4 * d));
                    let (vx, vy) = (x + dx, y + dy);
                    if (0..n).contains(&vx) && (0..n).contains(&vy) {
                        break vy * n + vx;
                    }
                };
                *slot = Edge { tail: id as u32, head: head as u32, kind: EdgeKind::Shortcut, ring_distance: None };
            }
        });
        edges.extend(shortcuts);
    }
    let marks = (0..n * n).map(|id| NodeMark::LatticeCoord { x: (id % n) as u32, y: (id / n) as u32 }).collect();
    let tag = ModelTag::Kleinberg { n: p.n, q, k: p.k, ell: p.ell };
    MarkedGraph::from_edges(tag, p.seed, marks, edges)
}
