//! Mark densities of the patch limit.
//!
//! For a base mark `m` in the unit square, outgoing shortcuts land at marks
//! with density proportional to `‖m − w‖₁^-ell`. Everything here works with
//! the four axis-aligned rectangles ("quadrants") that `m` cuts the square
//! into: on a rectangle of sides `(a, b)` with `m` at a corner, the kernel
//! mass and its radial profile have closed forms.

use std::sync::OnceLock;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::quadrature::integrate_pieces;
use crate::error::{Error, Result};
use crate::rng::KeyedRng;

fn check_ell(ell: f64) -> Result<()> {
    if !(ell.is_finite() && (0.0..2.0).contains(&ell)) {
        return Err(Error::Domain(format!(
            "mark densities need 0 <= ell < 2 (the kernel normalizer diverges), got {ell}"
        )));
    }
    Ok(())
}

fn check_mark(m: [f64; 2]) -> Result<()> {
    if !m.iter().all(|c| (0.0..=1.0).contains(c)) {
        return Err(Error::InvalidArgument(format!("mark {m:?} outside the unit square")));
    }
    Ok(())
}

/// `∫_c^s t^(b-1) dt` for `0 <= c <= s`, stable as `b → 0`.
fn power_integral(s: f64, c: f64, b: f64) -> f64 {
    if s <= c {
        return 0.0;
    }
    if c == 0.0 {
        // only reached with b > 0
        return s.powf(b) / b;
    }
    let log_ratio = (s / c).ln();
    let scaled = if b == 0.0 { log_ratio } else { (b * log_ratio).exp_m1() / b };
    c.powf(b) * scaled
}

/// A second antiderivative of `s^-ell`, up to a linear term, vanishing at 0.
fn second_antiderivative(s: f64, ell: f64) -> f64 {
    if s <= 0.0 {
        return 0.0;
    }
    let a = 1.0 - ell;
    let log_s = s.ln();
    let scaled = if a == 0.0 { log_s } else { (a * log_s).exp_m1() / a };
    s * scaled / (2.0 - ell)
}

/// Kernel mass of the rectangle `[0, a] × [0, b]` seen from its corner at the
/// origin: `∫∫ (u + v)^-ell du dv`.
pub fn corner_mass(a: f64, b: f64, ell: f64) -> f64 {
    if a <= 0.0 || b <= 0.0 {
        return 0.0;
    }
    second_antiderivative(a + b, ell) - second_antiderivative(a, ell) - second_antiderivative(b, ell)
}

/// The four rectangles around `m`: `(width, height, x sign, y sign)`.
fn quadrants(m: [f64; 2]) -> [(f64, f64, f64, f64); 4] {
    let [x, y] = m;
    [(1.0 - x, 1.0 - y, 1.0, 1.0), (x, 1.0 - y, -1.0, 1.0), (x, y, -1.0, -1.0), (1.0 - x, y, 1.0, -1.0)]
}

/// Normalizer `Z(m) = ∫ ‖m − w‖₁^-ell dw` of the outgoing mark density.
pub fn p_out_normalizer(m: [f64; 2], ell: f64) -> f64 {
    quadrants(m).iter().map(|&(a, b, _, _)| corner_mass(a, b, ell)).sum()
}

/// Smallest normalizer over the square, attained at the corners.
pub fn min_normalizer(ell: f64) -> f64 {
    corner_mass(1.0, 1.0, ell)
}

/// Length, in the horizontal coordinate, of the L1 sphere of radius `s`
/// inside an `a × b` rectangle seen from its corner.
fn shell_length(a: f64, b: f64, s: f64) -> f64 {
    (a.min(s) - (s - b).max(0.0)).max(0.0)
}

/// `∫_c^s t^-ell (t − c) dt`, zero when `s <= c`.
fn ramp_integral(s: f64, c: f64, ell: f64) -> f64 {
    if s <= c {
        return 0.0;
    }
    let upper = power_integral(s, c, 2.0 - ell);
    if c == 0.0 {
        upper
    } else {
        upper - c * power_integral(s, c, 1.0 - ell)
    }
}

/// Kernel mass within L1 radius `s` of `m`.
pub fn radial_cdf(m: [f64; 2], ell: f64, s: f64) -> f64 {
    quadrants(m)
        .iter()
        .filter(|q| q.0 > 0.0 && q.1 > 0.0)
        .map(|&(a, b, _, _)| {
            ramp_integral(s, 0.0, ell) - ramp_integral(s, a, ell) - ramp_integral(s, b, ell)
                + ramp_integral(s, a + b, ell)
        })
        .sum()
}

fn radial_density(m: [f64; 2], ell: f64, s: f64) -> f64 {
    let len: f64 = quadrants(m).iter().map(|&(a, b, _, _)| shell_length(a, b, s)).sum();
    s.powf(-ell) * len
}

/// Radius `s` with `radial_cdf(m, ell, s) = target`, by Newton steps kept
/// inside a shrinking bracket.
fn invert_radial(m: [f64; 2], ell: f64, target: f64) -> f64 {
    let s_max = quadrants(m).iter().map(|&(a, b, _, _)| a + b).fold(0.0, f64::max);
    let (mut lo, mut hi) = (0.0f64, s_max);
    let mut s = 0.5 * s_max;
    for _ in 0..200 {
        let f = radial_cdf(m, ell, s) - target;
        if f > 0.0 {
            hi = s;
        } else {
            lo = s;
        }
        if hi - lo <= 1e-15 * hi.max(1e-300) || f == 0.0 {
            break;
        }
        let d = radial_density(m, ell, s);
        let next = s - f / d;
        s = if d > 0.0 && next > lo && next < hi { next } else { 0.5 * (lo + hi) };
    }
    s
}

pub(crate) fn draw_p_out(m: [f64; 2], ell: f64, rng: &mut impl Rng) -> [f64; 2] {
    let z = p_out_normalizer(m, ell);
    loop {
        let s = invert_radial(m, ell, rng.random::<f64>() * z);
        let quads = quadrants(m);
        let lens: Vec<f64> = quads.iter().map(|&(a, b, _, _)| shell_length(a, b, s)).collect();
        let total: f64 = lens.iter().sum();
        if !(s > 0.0 && total > 0.0) {
            continue;
        }
        let mut pick = rng.random::<f64>() * total;
        let mut chosen = 3;
        for (i, &l) in lens.iter().enumerate() {
            if pick < l {
                chosen = i;
                break;
            }
            pick -= l;
        }
        let (a, b, sx, sy) = quads[chosen];
        let lo = (s - b).max(0.0);
        let u = lo + rng.random::<f64>() * (a.min(s) - lo);
        let w = [(m[0] + sx * u).clamp(0.0, 1.0), (m[1] + sy * (s - u)).clamp(0.0, 1.0)];
        if w != m {
            return w;
        }
    }
}

/// One draw from the outgoing mark density at `m`.
///
/// The L1 radius is drawn by inverting the closed-form radial CDF; given the
/// radius the mark is uniform on the clipped diamond, so a rectangle is
/// picked in proportion to its share of the sphere and a point uniformly on it.
pub fn p_out_sample(m: [f64; 2], ell: f64, seed: u64) -> Result<[f64; 2]> {
    check_ell(ell)?;
    check_mark(m)?;
    Ok(draw_p_out(m, ell, &mut KeyedRng::new(seed)))
}

/// Which law is used for the marks of incoming shortcut sources.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IncomingLaw {
    /// Density `∝ ‖m − w‖₁^-ell / Z(w)`: a source at `w` spreads its shortcut
    /// over its own normalizer. This integrates to one for every `m`.
    #[default]
    SelfNormalized,
    /// The unnormalized formula `(q / Λ_m) p_out,m(w)`, renormalized; its
    /// shape equals the outgoing law at `m`.
    Printed,
}

pub(crate) fn draw_p_in(m: [f64; 2], ell: f64, law: IncomingLaw, rng: &mut impl Rng) -> [f64; 2] {
    match law {
        IncomingLaw::Printed => draw_p_out(m, ell, rng),
        IncomingLaw::SelfNormalized => {
            // proposal p_out,m; accept with Z_min / Z(w) <= 1
            let z_min = min_normalizer(ell);
            loop {
                let w = draw_p_out(m, ell, rng);
                if rng.random::<f64>() * p_out_normalizer(w, ell) <= z_min {
                    return w;
                }
            }
        }
    }
}

/// One draw of the mark of a node sending a shortcut into mark `m`.
pub fn p_in_sample(m: [f64; 2], ell: f64, law: IncomingLaw, seed: u64) -> Result<[f64; 2]> {
    check_ell(ell)?;
    check_mark(m)?;
    Ok(draw_p_in(m, ell, law, &mut KeyedRng::new(seed)))
}

/// Expected number of incoming shortcuts at mark `m`:
/// `Λ_m = q ∫ ‖w − m‖₁^-ell / Z(w) dw`.
///
/// On each rectangle the integral is taken over L1 spheres. With the radius
/// written as `s = u^(1/(2-ell))` and the sphere parametrized by the fraction
/// `τ` of the radius spent horizontally, the integrand is bounded:
/// `Λ = q/(2-ell) Σ ∫ du ∫ dτ 1/Z(m + s(τ, 1-τ))`.
pub fn lambda_m(m: [f64; 2], ell: f64, q: usize, quad_tol: f64) -> Result<f64> {
    check_ell(ell)?;
    check_mark(m)?;
    if !(quad_tol > 0.0) {
        return Err(Error::InvalidArgument(format!("quadrature tolerance must be positive, got {quad_tol}")));
    }
    let expo = 2.0 - ell;
    let quads: Vec<_> = quadrants(m).into_iter().filter(|q| q.0 > 0.0 && q.1 > 0.0).collect();
    // per-rectangle budget on the un-scaled integral
    let budget = quad_tol * expo / (q.max(1) as f64 * quads.len().max(1) as f64);
    let mut total = 0.0;
    for (a, b, sx, sy) in quads {
        let inner = |s: f64| {
            if s <= 0.0 {
                return 1.0 / p_out_normalizer(m, ell);
            }
            let lo = (1.0 - b / s).max(0.0);
            let hi = (a / s).min(1.0);
            if hi <= lo {
                return 0.0;
            }
            let point = |t: f64| {
                let w = [(m[0] + sx * s * t).clamp(0.0, 1.0), (m[1] + sy * s * (1.0 - t)).clamp(0.0, 1.0)];
                1.0 / p_out_normalizer(w, ell)
            };
            integrate_pieces(point, &[lo, hi], 0.1 * budget)
        };
        let mut breaks = vec![0.0, a.powf(expo), b.powf(expo), (a + b).powf(expo)];
        breaks.sort_by(f64::total_cmp);
        breaks.dedup();
        total += integrate_pieces(|u: f64| inner(u.powf(1.0 / expo)), &breaks, budget);
    }
    Ok(q as f64 * total / expo)
}

const GRID: usize = 64;

/// Lazily filled table of `Λ_m` on a `65 × 65` grid, read by bilinear
/// interpolation. Only one eighth of the grid is computed; the rest follows
/// from the symmetries of the square. Concurrent fills are idempotent.
pub struct RateCache {
    ell: f64,
    q: usize,
    quad_tol: f64,
    cells: Vec<OnceLock<f64>>,
}

impl RateCache {
    pub fn new(ell: f64, q: usize, quad_tol: f64) -> Result<Self> {
        check_ell(ell)?;
        if !(quad_tol > 0.0) {
            return Err(Error::InvalidArgument(format!("quadrature tolerance must be positive, got {quad_tol}")));
        }
        let cells = (0..(GRID + 1) * (GRID + 1)).map(|_| OnceLock::new()).collect();
        Ok(Self { ell, q, quad_tol, cells })
    }

    fn node(&self, i: usize, j: usize) -> f64 {
        let fold = |t: usize| t.min(GRID - t);
        let (a, b) = (fold(i), fold(j));
        let (a, b) = (a.min(b), a.max(b));
        *self.cells[a * (GRID + 1) + b].get_or_init(|| {
            let m = [a as f64 / GRID as f64, b as f64 / GRID as f64];
            lambda_m(m, self.ell, self.q, self.quad_tol).expect("parameters checked at construction")
        })
    }

    /// Interpolated `Λ_m`.
    pub fn get(&self, m: [f64; 2]) -> f64 {
        let scaled = [m[0].clamp(0.0, 1.0) * GRID as f64, m[1].clamp(0.0, 1.0) * GRID as f64];
        let i = (scaled[0].floor() as usize).min(GRID - 1);
        let j = (scaled[1].floor() as usize).min(GRID - 1);
        let (fx, fy) = (scaled[0] - i as f64, scaled[1] - j as f64);
        let v00 = self.node(i, j);
        let v10 = self.node(i + 1, j);
        let v01 = self.node(i, j + 1);
        let v11 = self.node(i + 1, j + 1);
        (1.0 - fx) * ((1.0 - fy) * v00 + fy * v01) + fx * ((1.0 - fy) * v10 + fy * v11)
    }
}
