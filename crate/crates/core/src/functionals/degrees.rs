use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::marked_graph::{Direction, EdgeKind, MarkedGraph, ModelTag};

/// Selects the half-edges counted towards a node's degree.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeFilter {
    pub kind: Option<EdgeKind>,
    pub direction: Option<Direction>,
}

impl EdgeFilter {
    pub const ALL: Self = Self { kind: None, direction: None };

    pub fn of_kind(kind: EdgeKind) -> Self {
        Self { kind: Some(kind), direction: None }
    }

    pub fn shortcuts(direction: Direction) -> Self {
        Self { kind: Some(EdgeKind::Shortcut), direction: Some(direction) }
    }

    pub fn accepts(&self, kind: EdgeKind, direction: Direction) -> bool {
        self.kind.is_none_or(|k| k == kind) && self.direction.is_none_or(|d| d == direction)
    }
}

impl FromStr for EdgeFilter {
    type Err = Error;

    /// Accepts `all`, `ring`, `lattice`, `shortcut`, `in-shortcut`, `out-shortcut`.
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "all" => Self::ALL,
            "ring" => Self::of_kind(EdgeKind::Ring),
            "lattice" => Self::of_kind(EdgeKind::Lattice),
            "shortcut" => Self::of_kind(EdgeKind::Shortcut),
            "in-shortcut" => Self::shortcuts(Direction::Incoming),
            "out-shortcut" => Self::shortcuts(Direction::Outgoing),
            other => return Err(invalid(format!("unknown edge filter '{other}'"))),
        })
    }
}

impl fmt::Display for EdgeFilter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match (self.kind, self.direction) {
            (None, None) => "all",
            (Some(EdgeKind::Ring), None) => "ring",
            (Some(EdgeKind::Lattice), None) => "lattice",
            (Some(EdgeKind::Shortcut), None) => "shortcut",
            (Some(EdgeKind::Shortcut), Some(Direction::Incoming)) => "in-shortcut",
            (Some(EdgeKind::Shortcut), Some(Direction::Outgoing)) => "out-shortcut",
            _ => return write!(f, "{self:?}"),
        };
        f.write_str(s)
    }
}

/// `hist[j]` is the number of nodes with exactly `j` half-edges passing
/// `filter`; parallel edges count separately.
pub fn degree_census(g: &MarkedGraph, filter: EdgeFilter) -> Vec<u64> {
    let mut hist = Vec::new();
    for v in 0..g.node_count() {
        let d = g.neighbors(v).iter().filter(|h| filter.accepts(h.mark.kind, h.mark.direction)).count();
        if hist.len() <= d {
            hist.resize(d + 1, 0);
        }
        hist[d] += 1;
    }
    hist
}

/// Poisson(λ) pmf at `0..len`.
pub fn poisson_pmf(lambda: f64, len: usize) -> Vec<f64> {
    let mut p = Vec::with_capacity(len);
    let mut term = (-lambda).exp();
    for j in 0..len {
        p.push(term);
        term *= lambda / (j + 1) as f64;
    }
    p
}

/// Total variation between a count histogram and Poisson(λ), including the
/// Poisson mass beyond the histogram's support.
pub fn poisson_tv(hist: &[u64], lambda: f64) -> f64 {
    let total: u64 = hist.iter().sum();
    if total == 0 {
        return 1.0;
    }
    let pmf = poisson_pmf(lambda, hist.len());
    let covered: f64 = pmf.iter().sum();
    let diff: f64 = hist.iter().zip(&pmf).map(|(&c, &p)| (c as f64 / total as f64 - p).abs()).sum();
    0.5 * (diff + (1.0 - covered).max(0.0))
}

/// One row of the `ell > 2` tail check `P[len > d] ≤ 4 d^{2−ell} / (ell − 2)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LengthTailCheck {
    pub d: usize,
    pub empirical_tail: f64,
    pub bound: f64,
    pub std_error: f64,
    /// Empirical tail below the bound plus three standard errors.
    pub satisfied: bool,
}

/// `P[len < n^c]` for the `ell = 2` logarithmic law.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogScaleCheck {
    pub c: f64,
    pub threshold: f64,
    pub empirical: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShortcutLengthStats {
    pub n: usize,
    pub ell: f64,
    pub shortcuts: usize,
    /// `cdf[d − 1] = P[len ≤ d]` for `d = 1..=2(n−1)`.
    pub cdf: Vec<f64>,
    pub tail_checks: Vec<LengthTailCheck>,
    pub log_checks: Vec<LogScaleCheck>,
}

impl ShortcutLengthStats {
    pub fn tail(&self, d: usize) -> f64 {
        if d == 0 {
            1.0
        } else {
            1.0 - self.cdf[(d - 1).min(self.cdf.len() - 1)]
        }
    }

    /// `P[len < x]` for real `x`.
    pub fn below(&self, x: f64) -> f64 {
        let d = x.ceil() as usize;
        if d <= 1 {
            0.0
        } else {
            self.cdf[(d - 2).min(self.cdf.len() - 1)]
        }
    }
}

/// Empirical law of L1 shortcut lengths in a Kleinberg graph.
///
/// Tail checks are tabulated at powers of two when `ell > 2`; for `ell = 2`
/// the logarithmic law is reported on the grid `c = 0.1, 0.2, …, 0.9`.
pub fn shortcut_length_stats(g: &MarkedGraph) -> Result<ShortcutLengthStats> {
    let ModelTag::Kleinberg { n, ell, .. } = *g.model() else {
        return Err(Error::Unsupported("shortcut lengths need a Kleinberg graph".into()));
    };
    let max_len = 2 * (n - 1);
    let mut counts = vec![0u64; max_len + 1];
    for e in g.edges().iter().filter(|e| e.kind == EdgeKind::Shortcut) {
        let (a, b) = (g.coord(e.tail as usize).expect("lattice node"), g.coord(e.head as usize).expect("lattice node"));
        counts[(a.0.abs_diff(b.0) + a.1.abs_diff(b.1)) as usize] += 1;
    }
    let total: u64 = counts.iter().sum();
    let denom = total.max(1) as f64;
    let mut acc = 0u64;
    let cdf: Vec<f64> = counts[1..]
        .iter()
        .map(|&c| {
            acc += c;
            if total == 0 {
                1.0
            } else {
                acc as f64 / denom
            }
        })
        .collect();
    let mut stats =
        ShortcutLengthStats { n, ell, shortcuts: total as usize, cdf, tail_checks: vec![], log_checks: vec![] };
    if ell > 2.0 {
        let mut d = 1;
        while d <= max_len {
            let tail = stats.tail(d);
            let bound = 4.0 / (ell - 2.0) * (d as f64).powf(2.0 - ell);
            let std_error = (tail * (1.0 - tail) / denom).sqrt();
            stats.tail_checks.push(LengthTailCheck {
                d,
                empirical_tail: tail,
                bound,
                std_error,
                satisfied: tail <= bound + 3.0 * std_error,
            });
            d *= 2;
        }
    } else if ell == 2.0 {
        stats.log_checks = (1..10)
            .map(|i| {
                let c = i as f64 / 10.0;
                let threshold = (n as f64).powf(c);
                LogScaleCheck { c, threshold, empirical: stats.below(threshold) }
            })
            .collect();
    }
    Ok(stats)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{generate_kleinberg, generate_ws, KleinbergParams, WsParams};

    #[test]
    fn ring_point_mass() {
        let g = generate_ws(&WsParams { n: 40, k: 3, phi: 0.0, seed: 1 }).unwrap();
        assert_eq!(degree_census(&g, "ring".parse().unwrap()), vec![0, 0, 0, 0, 0, 0, 40]);
        assert_eq!(degree_census(&g, "in-shortcut".parse().unwrap()), vec![40]);
    }

    #[test]
    fn kleinberg_outgoing_point_mass() {
        let g = generate_kleinberg(&KleinbergParams { n: 16, q: 3, k: 1, ell: 2.0, seed: 2 }).unwrap();
        let hist = degree_census(&g, EdgeFilter::shortcuts(Direction::Outgoing));
        assert_eq!(hist, vec![0, 0, 0, 256]);
        let total: u64 = degree_census(&g, EdgeFilter::ALL).iter().enumerate().map(|(d, &c)| d as u64 * c).sum();
        assert_eq!(total as usize, 2 * g.edge_count());
    }

    #[test]
    fn filter_round_trip() {
        for s in ["all", "ring", "lattice", "shortcut", "in-shortcut", "out-shortcut"] {
            assert_eq!(s.parse::<EdgeFilter>().unwrap().to_string(), s);
        }
        assert!("sideways".parse::<EdgeFilter>().is_err());
    }

    #[test]
    fn poisson_tv_of_exact_pmf_is_small() {
        let pmf = poisson_pmf(0.6, 30);
        let hist: Vec<u64> = pmf.iter().map(|p| (p * 1e12).round() as u64).collect();
        assert!(poisson_tv(&hist, 0.6) < 1e-11);
        assert!((pmf[0] - 0.548812).abs() < 1e-6);
        assert_eq!(poisson_tv(&[0, 10], 0.0), 1.0);
    }

    #[test]
    fn cdf_is_monotone_and_complete() {
        let g = generate_kleinberg(&KleinbergParams { n: 24, q: 2, k: 1, ell: 3.0, seed: 5 }).unwrap();
        let s = shortcut_length_stats(&g).unwrap();
        assert_eq!(s.cdf.len(), 46);
        assert!(s.cdf.windows(2).all(|w| w[0] <= w[1]));
        assert_eq!(*s.cdf.last().unwrap(), 1.0);
        assert_eq!(s.tail_checks.iter().map(|c| c.d).collect::<Vec<_>>(), vec![1, 2, 4, 8, 16, 32]);
        assert_eq!(s.tail(0), 1.0);
        assert_eq!(s.below(1.0), 0.0);
        let ws = generate_ws(&WsParams { n: 10, k: 1, phi: 0.5, seed: 0 }).unwrap();
        assert!(matches!(shortcut_length_stats(&ws), Err(Error::Unsupported(_))));
    }
}
