//! Lazy samplers for the local limits of the finite models, and the rate and
//! density machinery they need.

mod density;
mod fuzz;
mod kappa;
mod patch;
mod quadrature;
mod zeta;

pub use density::{
    corner_mass, lambda_m, min_normalizer, p_in_sample, p_out_normalizer, p_out_sample, radial_cdf, IncomingLaw,
    RateCache,
};
pub use fuzz::{sample_fuzz_ball, FuzzParams};
pub use kappa::{sample_kappa_ball, KappaParams, KappaSampler, NEAR_RADIUS};
pub use patch::{sample_patch_ball, PatchParams, PatchSampler};
pub use quadrature::{integrate, integrate_pieces};
pub use zeta::{zeta, zeta_shifted};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::marked_graph::RootedNeighborhood;

/// Parameters of any of the three limit objects.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "limit", rename_all = "snake_case")]
pub enum LimitParams {
    Fuzz(FuzzParams),
    Patch(PatchParams),
    Kappa(KappaParams),
}

/// A ready-to-use sampler; construction does the per-parameter setup once.
pub enum LimitSampler {
    Fuzz(FuzzParams),
    Patch(PatchSampler),
    Kappa(KappaSampler),
}

impl LimitSampler {
    pub fn new(params: &LimitParams) -> Result<Self> {
        Ok(match *params {
            LimitParams::Fuzz(p) => {
                p.validate()?;
                LimitSampler::Fuzz(p)
            }
            LimitParams::Patch(p) => LimitSampler::Patch(PatchSampler::new(p)?),
            LimitParams::Kappa(p) => LimitSampler::Kappa(KappaSampler::new(p)?),
        })
    }

    pub fn params(&self) -> LimitParams {
        match self {
            LimitSampler::Fuzz(p) => LimitParams::Fuzz(*p),
            LimitSampler::Patch(s) => LimitParams::Patch(*s.params()),
            LimitSampler::Kappa(s) => LimitParams::Kappa(*s.params()),
        }
    }

    pub fn sample(&self, r: u32, seed: u64) -> RootedNeighborhood {
        match self {
            LimitSampler::Fuzz(p) => sample_fuzz_ball(p, r, seed).expect("parameters validated"),
            LimitSampler::Patch(s) => s.sample(r, seed),
            LimitSampler::Kappa(s) => s.sample(r, seed),
        }
    }
}
