//! Empirical distributions of rooted neighbourhoods.
//!
//! A census draws rooted balls (every root of a finite graph, a uniform
//! subsample of roots, or independent limit samples), groups them into
//! isomorphism classes of binned-mark balls, and records each class's
//! frequency with one representative. Grouping runs as a parallel fold whose
//! merge is associative and commutative: a class is identified by its
//! smallest sample index, so the result does not depend on scheduling.

mod cache;
mod exact;
mod report;

pub use cache::CensusCache;
pub use exact::{enumerate_fuzz_shapes, exact_fuzz_distribution, exact_fuzz_probability, tv_to_exact_fuzz, FuzzShape};
pub use report::{convergence_report, default_mark_mode, limit_params_for, ConvergenceReport, FiniteModel, ReportRow};

use std::collections::HashMap;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::limit_samplers::{LimitParams, LimitSampler};
use crate::marked_graph::{
    find_isomorphism, graph_ball, lattice_ball, mark_labels, BallKind, CanonicalKey, MarkMode, MarkedGraph, ModelTag,
    NodeMark, RootedNeighborhood, Signature,
};
use crate::rng::{derive, domain, KeyedRng};

/// What is counted and how balls are compared.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CensusSpec {
    pub radius: u32,
    /// Mark bin width; zero compares marks exactly.
    pub epsilon: f64,
    pub mark_mode: MarkMode,
    pub ball_kind: BallKind,
}

impl CensusSpec {
    pub fn graph_ball(radius: u32, epsilon: f64, mark_mode: MarkMode) -> Self {
        Self { radius, epsilon, mark_mode, ball_kind: BallKind::GraphBall }
    }

    fn validate(&self) -> Result<()> {
        if !(self.epsilon.is_finite() && self.epsilon >= 0.0) {
            return Err(invalid(format!("epsilon must be finite and nonnegative, got {}", self.epsilon)));
        }
        Ok(())
    }

    fn check_marks(&self, continuous: bool) -> Result<()> {
        if continuous && self.mark_mode != MarkMode::Ignore && self.epsilon == 0.0 {
            return Err(invalid("continuous marks need a positive bin width epsilon"));
        }
        Ok(())
    }
}

/// Which roots of a finite graph enter a census.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RootSample {
    All,
    /// This many roots drawn uniformly with replacement.
    Uniform(usize),
}

/// Where the counted balls came from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum CensusSource {
    Finite {
        model: ModelTag,
        n: usize,
        seed: u64,
        roots: RootSample,
    },
    Limit {
        params: LimitParams,
        seed: u64,
    },
    /// Exact probabilities of enumerated shapes; masses cover the enumerated part only.
    ExactPmf {
        phi: f64,
        max_incoming: usize,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bucket {
    pub key: CanonicalKey,
    pub mass: f64,
    pub count: u64,
    pub representative: RootedNeighborhood,
}

/// Empirical measure over isomorphism classes of rooted balls.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NeighborhoodDistribution {
    pub radius: u32,
    pub epsilon: f64,
    pub ball_kind: BallKind,
    pub mark_mode: MarkMode,
    pub source: CensusSource,
    pub total_samples: u64,
    /// Sorted by key.
    pub buckets: Vec<Bucket>,
}

impl NeighborhoodDistribution {
    pub fn spec(&self) -> CensusSpec {
        CensusSpec { radius: self.radius, epsilon: self.epsilon, mark_mode: self.mark_mode, ball_kind: self.ball_kind }
    }

    pub fn total_mass(&self) -> f64 {
        self.buckets.iter().map(|b| b.mass).sum()
    }

    /// The same census seen at a smaller radius: every representative is
    /// truncated and classes that become equal are merged.
    pub fn truncated(&self, radius: u32) -> NeighborhoodDistribution {
        let spec = CensusSpec { radius: radius.min(self.radius), ..self.spec() };
        let mut tally = Tally::default();
        for (i, b) in self.buckets.iter().enumerate() {
            tally.add_weighted(i as u64, b.representative.truncate(spec.radius), &spec, b.count, b.mass);
        }
        tally.finish(spec, self.source.clone(), self.total_samples)
    }

    pub fn bucket_of(&self, nb: &RootedNeighborhood) -> Option<&Bucket> {
        let spec = self.spec();
        let probe = Class::new(0, nb.clone(), &spec, 1, 0.0);
        self.buckets.iter().find(|b| {
            let c = Class::new(0, b.representative.clone(), &spec, 1, 0.0);
            c.matches(&probe)
        })
    }
}

/// Digest of a ball under a census's mark binning.
pub fn census_digest(nb: &RootedNeighborhood, epsilon: f64, mode: MarkMode) -> [u8; 16] {
    Signature::new(nb, &mark_labels(nb, epsilon, mode)).digest
}

struct Class {
    first: u64,
    count: u64,
    mass: f64,
    labels: Vec<u64>,
    sig: Signature,
    nb: RootedNeighborhood,
}

impl Class {
    fn new(first: u64, nb: RootedNeighborhood, spec: &CensusSpec, count: u64, mass: f64) -> Self {
        let labels = mark_labels(&nb, spec.epsilon, spec.mark_mode);
        let sig = Signature::new(&nb, &labels);
        Self { first, count, mass, labels, sig, nb }
    }

    fn matches(&self, other: &Class) -> bool {
        find_isomorphism(&self.sig, &other.sig, |v, x| self.labels[v] == other.labels[x]).is_some()
    }
}

#[derive(Default)]
struct Tally {
    classes: HashMap<[u8; 16], Vec<Class>>,
}

impl Tally {
    fn insert(&mut self, c: Class) {
        let list = self.classes.entry(c.sig.digest).or_default();
        if let Some(existing) = list.iter_mut().find(|e| e.matches(&c)) {
            existing.count += c.count;
            existing.mass += c.mass;
            if c.first < existing.first {
                existing.first = c.first;
                existing.labels = c.labels;
                existing.sig = c.sig;
                existing.nb = c.nb;
            }
        } else {
            list.push(c);
        }
    }

    fn add(&mut self, index: u64, nb: RootedNeighborhood, spec: &CensusSpec) {
        self.insert(Class::new(index, nb, spec, 1, 0.0));
    }

    fn add_weighted(&mut self, index: u64, nb: RootedNeighborhood, spec: &CensusSpec, count: u64, mass: f64) {
        self.insert(Class::new(index, nb, spec, count, mass));
    }

    fn merge(mut self, other: Tally) -> Tally {
        if self.classes.len() < other.classes.len() {
            return other.merge(self);
        }
        for (_, list) in other.classes {
            for c in list {
                self.insert(c);
            }
        }
        self
    }

    /// Buckets with masses `count / total`, or the carried masses when
    /// `total` is zero.
    fn finish(self, spec: CensusSpec, source: CensusSource, total: u64) -> NeighborhoodDistribution {
        let mut buckets = Vec::new();
        for (digest, mut list) in self.classes {
            list.sort_by_key(|c| c.first);
            for (suffix, c) in list.into_iter().enumerate() {
                let mass = if total > 0 { c.count as f64 / total as f64 } else { c.mass };
                buckets.push(Bucket {
                    key: CanonicalKey { digest, suffix: suffix as u32, epsilon: spec.epsilon },
                    mass,
                    count: c.count,
                    representative: c.nb,
                });
            }
        }
        buckets.sort_by_key(|b| (b.key.digest, b.key.suffix));
        NeighborhoodDistribution {
            radius: spec.radius,
            epsilon: spec.epsilon,
            ball_kind: spec.ball_kind,
            mark_mode: spec.mark_mode,
            source,
            total_samples: total,
            buckets,
        }
    }
}

/// Counts `count` balls produced by `draw(i)`, in parallel.
fn tally(count: u64, spec: &CensusSpec, draw: impl Fn(u64) -> Result<RootedNeighborhood> + Sync) -> Result<Tally> {
    (0..count as usize)
        .into_par_iter()
        .with_min_len(256)
        .try_fold(Tally::default, |mut t, i| {
            t.add(i as u64, draw(i as u64)?, spec);
            Ok::<_, Error>(t)
        })
        .try_reduce(Tally::default, |a, b| Ok(a.merge(b)))
}

fn has_continuous_marks(g: &MarkedGraph) -> bool {
    g.node_count() > 0 && matches!(g.ball_mark(0), NodeMark::PatchMark { .. })
}

/// Census of the rooted balls of a finite graph.
pub fn finite_census(
    g: &MarkedGraph,
    spec: &CensusSpec,
    roots: RootSample,
    seed: u64,
) -> Result<NeighborhoodDistribution> {
    spec.validate()?;
    spec.check_marks(has_continuous_marks(g))?;
    let n = g.node_count();
    if n == 0 {
        return Err(invalid("census of an empty graph"));
    }
    let total = match roots {
        RootSample::All => n as u64,
        RootSample::Uniform(m) => m as u64,
    };
    if total == 0 {
        return Err(invalid("census needs at least one root"));
    }
    let pick = |i: u64| match roots {
        RootSample::All => i as usize,
        RootSample::Uniform(_) => KeyedRng::stream(seed, &[domain::CENSUS_ROOT, i]).random_range(0..n),
    };
    let t = tally(total, spec, |i| match spec.ball_kind {
        BallKind::GraphBall => graph_ball(g, pick(i), spec.radius),
        BallKind::LatticeBall => lattice_ball(g, pick(i), spec.radius),
    })?;
    let source = CensusSource::Finite { model: g.model().clone(), n, seed: g.seed(), roots };
    Ok(t.finish(*spec, source, total))
}

/// Monte-Carlo census of independent balls drawn from a limit sampler.
pub fn limit_census(
    sampler: &LimitSampler,
    spec: &CensusSpec,
    num_samples: usize,
    seed: u64,
) -> Result<NeighborhoodDistribution> {
    spec.validate()?;
    spec.check_marks(!matches!(sampler, LimitSampler::Fuzz(_)))?;
    if spec.ball_kind != BallKind::GraphBall {
        return Err(Error::Unsupported("limit samplers produce graph balls only".into()));
    }
    if num_samples == 0 {
        return Err(invalid("limit census needs at least one sample"));
    }
    let t =
        tally(
            num_samples as u64,
            spec,
            |i| Ok(sampler.sample(spec.radius, derive(seed, &[domain::CENSUS_SAMPLE, i]))),
        )?;
    let source = CensusSource::Limit { params: sampler.params(), seed };
    Ok(t.finish(*spec, source, num_samples as u64))
}

fn check_same_spec(a: &NeighborhoodDistribution, b: &NeighborhoodDistribution) -> Result<()> {
    if a.spec() != b.spec() {
        return Err(invalid(format!("censuses are not comparable: {:?} vs {:?}", a.spec(), b.spec())));
    }
    Ok(())
}

/// Total variation `½ Σ |a − b|` over the union of classes. Buckets of the
/// two censuses are matched by isomorphism of their representatives.
pub fn tv_distance(a: &NeighborhoodDistribution, b: &NeighborhoodDistribution) -> Result<f64> {
    check_same_spec(a, b)?;
    let spec = a.spec();
    let mut others: HashMap<[u8; 16], Vec<(Class, bool)>> = HashMap::new();
    for bucket in &b.buckets {
        let c = Class::new(0, bucket.representative.clone(), &spec, 0, bucket.mass);
        others.entry(c.sig.digest).or_default().push((c, false));
    }
    let mut sum = 0.0;
    for bucket in &a.buckets {
        let c = Class::new(0, bucket.representative.clone(), &spec, 0, bucket.mass);
        let matched =
            others.get_mut(&c.sig.digest).and_then(|list| list.iter_mut().find(|(o, used)| !*used && o.matches(&c)));
        match matched {
            Some((o, used)) => {
                *used = true;
                sum += (bucket.mass - o.mass).abs();
            }
            None => sum += bucket.mass,
        }
    }
    sum += others.values().flatten().filter(|(_, used)| !used).map(|(o, _)| o.mass).sum::<f64>();
    Ok(0.5 * sum)
}
