//! Multi-start search for roots of the weighted estimating equations.
//!
//! Each start is the maximum likelihood estimate of a small random subsample.
//! Reweighting from such a start tends to settle on a root describing the
//! substructure the subsample came from, so a few hundred starts expose the
//! distinct roots. Converged fits are merged into a [`RootSet`].

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::data::Dataset;
use crate::depth::{DepthOptions, SampleDepths};
use crate::error::{Error, Result};
use crate::estimator::{mle, wlee_fit, FitOptions, FitResult, ModelParams};
use crate::weights::WeightConfig;

/// Mixed into the user seed for the depth direction streams so they differ
/// from the subsample streams.
const DEPTH_SEED_MIX: u64 = 0xD1B5_4A32_D192_ED03;
/// Extra draws allowed when a subsample has singular covariance.
const MAX_REDRAWS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootSearchConfig {
    pub n_subsamples: usize,
    pub subsample_size: usize,
    pub seed: u64,
    pub dedup_tol: f64,
    pub fit: FitOptions,
    /// Random projection directions for p >= 3 (default 1000·p).
    pub n_dirs: Option<usize>,
}

impl Default for RootSearchConfig {
    fn default() -> Self {
        RootSearchConfig {
            n_subsamples: 500,
            subsample_size: 6,
            seed: 0,
            dedup_tol: 1e-3,
            fit: FitOptions::default(),
            n_dirs: None,
        }
    }
}

impl RootSearchConfig {
    pub fn validate(&self, n: usize, p: usize) -> Result<()> {
        if self.subsample_size < p + 1 {
            return Err(Error::Config(format!(
                "subsample size {} must be at least p + 1 = {}",
                self.subsample_size,
                p + 1
            )));
        }
        if self.subsample_size > n {
            return Err(Error::Domain(format!(
                "subsample size {} exceeds the number of observations {n}",
                self.subsample_size
            )));
        }
        if !(self.dedup_tol > 0.0) {
            return Err(Error::Config("dedup tolerance must be > 0".into()));
        }
        if !(self.fit.tol > 0.0) {
            return Err(Error::Config("convergence tolerance must be > 0".into()));
        }
        if self.n_dirs == Some(0) {
            return Err(Error::Config("n_dirs must be >= 1".into()));
        }
        Ok(())
    }

    pub fn depth_options(&self) -> DepthOptions {
        DepthOptions {
            n_dirs: self.n_dirs,
            seed: self.seed ^ DEPTH_SEED_MIX,
            force_approximate: false,
        }
    }
}

/// Deduplicated roots. `roots[k]` was reached from the starts listed in
/// `basin_starts[k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RootSet {
    pub roots: Vec<FitResult>,
    pub basin_counts: Vec<usize>,
    pub basin_starts: Vec<Vec<usize>>,
    pub n_failed: usize,
    pub failed_starts: Vec<usize>,
}

impl RootSet {
    pub fn len(&self) -> usize {
        self.roots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.roots.is_empty()
    }

    pub fn n_starts(&self) -> usize {
        self.basin_counts.iter().sum::<usize>() + self.n_failed
    }
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn draw_one(rng: &mut ChaCha8Rng, n: usize, size: usize) -> Vec<usize> {
    let mut idx = index::sample(rng, n, size).into_vec();
    idx.sort_unstable();
    idx
}

/// Index sets of the subsamples used as starting points, one seeded stream
/// per subsample.
pub fn draw_subsamples(data: &Dataset, config: &RootSearchConfig) -> Result<Vec<Vec<usize>>> {
    let n = data.n();
    if config.subsample_size > n {
        return Err(Error::Domain(format!(
            "subsample size {} exceeds the number of observations {n}",
            config.subsample_size
        )));
    }
    Ok((0..config.n_subsamples)
        .map(|k| draw_one(&mut stream_rng(config.seed, k as u64), n, config.subsample_size))
        .collect())
}

/// The directed closeness measure used for merging: relative location and
/// relative Frobenius scatter differences, measured against `a`.
pub fn root_distance(a: &ModelParams, b: &ModelParams) -> f64 {
    let dmu = (&a.mu - &b.mu).norm() / (1.0 + a.mu.norm());
    let dsigma = (a.sigma.matrix() - b.sigma.matrix()).norm() / (1.0 + a.sigma.matrix().norm());
    dmu.max(dsigma)
}

fn same_root(a: &FitResult, b: &FitResult, tol: f64) -> bool {
    root_distance(&a.theta, &b.theta) < tol || root_distance(&b.theta, &a.theta) < tol
}

struct Cluster {
    rep: FitResult,
    members: Vec<usize>,
}

fn dedup_labeled(fits: Vec<(usize, FitResult)>, tol: f64) -> (Vec<FitResult>, Vec<Vec<usize>>) {
    let mut clusters: Vec<Cluster> = Vec::new();
    for (label, fit) in fits {
        match clusters.iter_mut().find(|c| same_root(&c.rep, &fit, tol)) {
            Some(c) => {
                c.members.push(label);
                if fit.weight_sum > c.rep.weight_sum {
                    c.rep = fit;
                }
            }
            None => clusters.push(Cluster {
                rep: fit,
                members: vec![label],
            }),
        }
    }
    // a representative swap can bring two clusters within tolerance
    'merge: loop {
        for i in 0..clusters.len() {
            for j in (i + 1)..clusters.len() {
                if same_root(&clusters[i].rep, &clusters[j].rep, tol) {
                    let other = clusters.remove(j);
                    let c = &mut clusters[i];
                    c.members.extend(other.members);
                    c.members.sort_unstable();
                    if other.rep.weight_sum > c.rep.weight_sum {
                        c.rep = other.rep;
                    }
                    continue 'merge;
                }
            }
        }
        break;
    }
    clusters.sort_by(|a, b| b.rep.weight_sum.total_cmp(&a.rep.weight_sum));
    clusters.into_iter().map(|c| (c.rep, c.members)).unzip()
}

/// Greedy merge of converged fits in arrival order. Fits are labelled by
/// their position in `fits`; roots are ordered by descending weight sum.
pub fn dedup_roots(fits: Vec<FitResult>, dedup_tol: f64) -> RootSet {
    let (roots, basin_starts) = dedup_labeled(fits.into_iter().enumerate().collect(), dedup_tol);
    RootSet {
        basin_counts: basin_starts.iter().map(Vec::len).collect(),
        roots,
        basin_starts,
        n_failed: 0,
        failed_starts: Vec::new(),
    }
}

/// Computes sample depths, then runs [`find_roots_with_depths`].
pub fn find_roots(data: &Dataset, wconfig: &WeightConfig, rconfig: &RootSearchConfig) -> Result<RootSet> {
    wconfig.validate()?;
    rconfig.validate(data.n(), data.p())?;
    let depths = SampleDepths::compute(data, &rconfig.depth_options())?;
    find_roots_with_depths(data, &depths, wconfig, rconfig)
}

/// Result of a single start: a fit, or `None` when every draw was degenerate.
fn run_start(
    data: &Dataset,
    depths: &SampleDepths,
    wconfig: &WeightConfig,
    rconfig: &RootSearchConfig,
    k: usize,
) -> Option<FitResult> {
    let mut rng = stream_rng(rconfig.seed, k as u64);
    for _ in 0..=MAX_REDRAWS {
        let idx = draw_one(&mut rng, data.n(), rconfig.subsample_size);
        if let Ok(theta0) = mle(&data.select(&idx)) {
            return Some(wlee_fit(data, &theta0, wconfig, depths, &rconfig.fit));
        }
    }
    None
}

pub fn find_roots_with_depths(
    data: &Dataset,
    depths: &SampleDepths,
    wconfig: &WeightConfig,
    rconfig: &RootSearchConfig,
) -> Result<RootSet> {
    wconfig.validate()?;
    rconfig.validate(data.n(), data.p())?;
    let outcomes: Vec<Option<FitResult>> = (0..rconfig.n_subsamples)
        .into_par_iter()
        .map(|k| run_start(data, depths, wconfig, rconfig, k))
        .collect();

    let mut failed_starts = Vec::new();
    let mut converged = Vec::new();
    for (k, outcome) in outcomes.into_iter().enumerate() {
        match outcome {
            Some(fit) if fit.converged => converged.push((k, fit)),
            _ => failed_starts.push(k),
        }
    }
    let (roots, basin_starts) = dedup_labeled(converged, rconfig.dedup_tol);
    Ok(RootSet {
        basin_counts: basin_starts.iter().map(Vec::len).collect(),
        roots,
        basin_starts,
        n_failed: failed_starts.len(),
        failed_starts,
    })
}
