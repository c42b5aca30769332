use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{finite_census, limit_census, tv_distance, CensusCache, CensusSpec, RootSample};
use crate::error::{invalid, Error, Result};
use crate::generators::{generate_kleinberg, generate_ws, KleinbergParams, WsParams};
use crate::limit_samplers::{FuzzParams, IncomingLaw, KappaParams, LimitParams, LimitSampler, PatchParams};
use crate::marked_graph::{MarkMode, MarkedGraph};
use crate::rng::{derive, domain};

/// A finite model family with the size left open.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum FiniteModel {
    Ws { k: usize, phi: f64 },
    Kleinberg { q: usize, k: usize, ell: f64 },
}

impl FiniteModel {
    pub fn generate(&self, n: usize, seed: u64) -> Result<MarkedGraph> {
        match *self {
            FiniteModel::Ws { k, phi } => generate_ws(&WsParams { n, k, phi, seed }),
            FiniteModel::Kleinberg { q, k, ell } => generate_kleinberg(&KleinbergParams { n, q, k, ell, seed }),
        }
    }
}

/// The limit object a finite model converges to. `ell = 2` has no sampler.
pub fn limit_params_for(model: &FiniteModel) -> Result<LimitParams> {
    Ok(match *model {
        FiniteModel::Ws { k, phi } => LimitParams::Fuzz(FuzzParams { k, phi, reduced_root: false }),
        FiniteModel::Kleinberg { q, k, ell } if ell < 2.0 => LimitParams::Patch(PatchParams {
            q,
            k,
            ell,
            reduced_root: false,
            quad_tol: 1e-4,
            incoming_law: IncomingLaw::SelfNormalized,
        }),
        FiniteModel::Kleinberg { q, k, ell } if ell > 2.0 => {
            LimitParams::Kappa(KappaParams { q, k, ell, tail_mass_tol: 1e-6 })
        }
        FiniteModel::Kleinberg { ell, .. } => {
            return Err(Error::Domain(format!("no limit sampler at ell = {ell}")));
        }
    })
}

/// Mark handling suited to a model: patch marks are compared relative to
/// the root; κ-lattice balls carry no mark information.
pub fn default_mark_mode(model: &FiniteModel) -> MarkMode {
    match *model {
        FiniteModel::Kleinberg { ell, .. } if ell < 2.0 => MarkMode::Recentered,
        _ => MarkMode::Ignore,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub n: usize,
    pub tv: f64,
    pub finite_samples: u64,
    pub limit_samples: u64,
    pub finite_buckets: usize,
    /// Seconds spent on this row; not part of reproducible output.
    pub wall_time_s: f64,
}

/// Distances between finite censuses at growing `n` and one limit census.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub model: FiniteModel,
    pub limit: LimitParams,
    pub spec: CensusSpec,
    pub seed: u64,
    pub limit_buckets: usize,
    /// Sorted by `n`.
    pub rows: Vec<ReportRow>,
}

#[derive(Serialize)]
struct CacheRequest<'a> {
    kind: &'static str,
    version: &'static str,
    params: &'a LimitParams,
    spec: &'a CensusSpec,
    samples: usize,
    seed: u64,
}

/// Builds the report; the limit census is drawn once (or read from `cache`)
/// and shared by all rows. Graph `i` uses a seed derived from `seed` and its size.
pub fn convergence_report(
    model: FiniteModel,
    spec: CensusSpec,
    ns: &[usize],
    roots: RootSample,
    limit_samples: usize,
    seed: u64,
    cache: Option<&CensusCache>,
) -> Result<ConvergenceReport> {
    if ns.windows(2).any(|w| w[0] >= w[1]) {
        return Err(invalid("sizes must be strictly increasing"));
    }
    let limit = limit_params_for(&model)?;
    let limit_seed = derive(seed, &[domain::REPORT, u64::MAX]);
    let compute = || limit_census(&LimitSampler::new(&limit)?, &spec, limit_samples, limit_seed);
    let reference = match cache {
        Some(c) => {
            let request = CacheRequest {
                kind: "limit_census",
                version: env!("CARGO_PKG_VERSION"),
                params: &limit,
                spec: &spec,
                samples: limit_samples,
                seed: limit_seed,
            };
            c.get_or_compute(&request, compute)?
        }
        None => compute()?,
    };
    let mut rows = Vec::new();
    for &n in ns {
        let start = Instant::now();
        let g = model.generate(n, derive(seed, &[domain::REPORT, n as u64]))?;
        let fin = finite_census(&g, &spec, roots, derive(seed, &[domain::CENSUS_ROOT, n as u64]))?;
        rows.push(ReportRow {
            n,
            tv: tv_distance(&fin, &reference)?,
            finite_samples: fin.total_samples,
            limit_samples: reference.total_samples,
            finite_buckets: fin.buckets.len(),
            wall_time_s: start.elapsed().as_secs_f64(),
        });
    }
    Ok(ConvergenceReport { model, limit, spec, seed, limit_buckets: reference.buckets.len(), rows })
}
