//! Halfspace (Tukey) depth.
//!
//! Finite-sample depth uses closed halfspaces: the depth of `x` is the
//! smallest fraction of observations `x_i` with `uᵀx_i >= uᵀx` over unit
//! directions `u`. Exact algorithms are provided for p = 1 (counting) and
//! p = 2 (angular sweep over exact orientation predicates). For p >= 3 the
//! minimum is taken over a finite direction pool, which gives an upper bound
//! on the exact depth.

use std::cmp::Ordering;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use robust::{orient2d, Coord};
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::estimator::ModelParams;
use crate::numerics::{chi2_sf, mahalanobis_sq};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DepthKind {
    Exact,
    Approximate,
    Model,
}

/// A depth value in [0, 1]. Finite-sample values carry their halfspace count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DepthValue {
    pub value: f64,
    pub kind: DepthKind,
    /// Minimal closed-halfspace count (finite-sample kinds only).
    pub count: Option<usize>,
}

impl DepthValue {
    pub fn from_count(count: usize, n: usize, kind: DepthKind) -> Self {
        DepthValue {
            value: count as f64 / n as f64,
            kind,
            count: Some(count),
        }
    }

    pub fn model(value: f64) -> Self {
        DepthValue {
            value,
            kind: DepthKind::Model,
            count: None,
        }
    }
}

fn non_empty(n: usize) -> Result<()> {
    if n == 0 {
        Err(Error::Domain("depth of an empty sample is undefined".into()))
    } else {
        Ok(())
    }
}

/// Exact depth on the line: `min(#{x_i <= x}, #{x_i >= x}) / n`.
pub fn depth_exact_1d(x: f64, sample: &[f64]) -> Result<DepthValue> {
    non_empty(sample.len())?;
    let le = sample.iter().filter(|&&v| v <= x).count();
    let ge = sample.iter().filter(|&&v| v >= x).count();
    Ok(DepthValue::from_count(le.min(ge), sample.len(), DepthKind::Exact))
}

#[inline]
fn coord(p: [f64; 2]) -> Coord<f64> {
    Coord { x: p[0], y: p[1] }
}

/// Exact planar halfspace depth by angular sweep, O(n log n).
///
/// Points coinciding with `x` lie in every closed halfplane. For the others
/// the minimal closed count equals `m - M`, where `M` is the largest number
/// of points strictly inside an open halfplane bounded by a line through `x`;
/// `M` is found with a two-pointer sweep over the circular angular order.
pub fn depth_exact_2d(x: [f64; 2], sample: &[[f64; 2]]) -> Result<DepthValue> {
    non_empty(sample.len())?;
    Ok(DepthValue::from_count(
        halfplane_count_2d(x, sample),
        sample.len(),
        DepthKind::Exact,
    ))
}

fn halfplane_count_2d(x: [f64; 2], sample: &[[f64; 2]]) -> usize {
    let origin = coord(x);
    let mut coincident = 0usize;
    // upper half: angle in [0, pi) around x
    let mut pts: Vec<(bool, Coord<f64>)> = Vec::with_capacity(sample.len());
    for s in sample {
        if s[0] == x[0] && s[1] == x[1] {
            coincident += 1;
        } else {
            let upper = s[1] > x[1] || (s[1] == x[1] && s[0] > x[0]);
            pts.push((upper, coord(*s)));
        }
    }
    let m = pts.len();
    if m == 0 {
        return coincident;
    }

    pts.sort_by(|a, b| match (a.0, b.0) {
        (true, false) => Ordering::Less,
        (false, true) => Ordering::Greater,
        _ => {
            let o = orient2d(origin, a.1, b.1);
            if o > 0.0 {
                Ordering::Less
            } else if o < 0.0 {
                Ordering::Greater
            } else {
                Ordering::Equal
            }
        }
    });

    // b lies in the half-open arc [angle(a), angle(a) + pi)
    let in_arc = |a: &(bool, Coord<f64>), b: &(bool, Coord<f64>)| {
        let o = orient2d(origin, a.1, b.1);
        o > 0.0 || (o == 0.0 && a.0 == b.0)
    };

    let mut best = 0usize;
    let mut j = 0usize;
    for i in 0..m {
        j = j.max(i + 1);
        while j < i + m && in_arc(&pts[i], &pts[j % m]) {
            j += 1;
        }
        best = best.max(j - i);
        if best == m {
            break;
        }
    }
    coincident + m - best
}

/// Minimal projected closed-halfspace count over the given unit directions.
/// Each direction covers both `u` and `-u`.
pub fn projection_count<'a, I>(x: &[f64], sample: &[f64], p: usize, directions: I) -> usize
where
    I: IntoIterator<Item = &'a [f64]>,
{
    let n = sample.len() / p;
    let mut best = n;
    for u in directions {
        let px: f64 = dot(u, x);
        let (mut le, mut ge) = (0usize, 0usize);
        for row in sample.chunks_exact(p) {
            let v = dot(u, row);
            if v <= px {
                le += 1;
            }
            if v >= px {
                ge += 1;
            }
        }
        best = best.min(le.min(ge));
        if best == 0 {
            break;
        }
    }
    best
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| u * v).sum()
}

fn normalized(v: Vec<f64>) -> Option<Vec<f64>> {
    let norm = dot(&v, &v).sqrt();
    if norm > 0.0 && norm.is_finite() {
        Some(v.into_iter().map(|c| c / norm).collect())
    } else {
        None
    }
}

/// Direction pool for [`depth_approx`]: the normalized data-to-query
/// directions, the query-to-mean direction, then `n_dirs` seeded uniform
/// directions. Pools for the same seed are nested in `n_dirs`.
pub fn direction_pool(x: &[f64], sample: &[f64], p: usize, n_dirs: usize, seed: u64, stream: u64) -> Vec<Vec<f64>> {
    let n = sample.len() / p;
    let mut pool = Vec::with_capacity(n + 1 + n_dirs);
    let mut mean = vec![0.0; p];
    for row in sample.chunks_exact(p) {
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v / n as f64;
        }
        if let Some(u) = normalized(row.iter().zip(x).map(|(a, b)| a - b).collect()) {
            pool.push(u);
        }
    }
    if let Some(u) = normalized(mean.iter().zip(x).map(|(a, b)| a - b).collect()) {
        pool.push(u);
    }
    pool.extend(random_directions(p, n_dirs, seed, stream));
    pool
}

/// `count` uniformly distributed unit vectors in R^p from a seeded stream.
pub fn random_directions(p: usize, count: usize, seed: u64, stream: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let v: Vec<f64> = (0..p).map(|_| StandardNormal.sample(&mut rng)).collect();
        if let Some(u) = normalized(v) {
            out.push(u);
        }
    }
    out
}

/// Random-projection approximation of the halfspace depth of `x`.
///
/// `sample` is row-major n×p. The result never falls below the exact depth.
pub fn depth_approx(x: &[f64], sample: &[f64], p: usize, n_dirs: usize, seed: u64) -> Result<DepthValue> {
    depth_approx_stream(x, sample, p, n_dirs, seed, 0)
}

fn depth_approx_stream(
    x: &[f64],
    sample: &[f64],
    p: usize,
    n_dirs: usize,
    seed: u64,
    stream: u64,
) -> Result<DepthValue> {
    if p == 0 || x.len() != p || !sample.len().is_multiple_of(p) {
        return Err(Error::DimensionMismatch {
            expected: p,
            got: x.len(),
        });
    }
    if n_dirs == 0 {
        return Err(Error::Domain("n_dirs must be >= 1".into()));
    }
    let n = sample.len() / p;
    non_empty(n)?;
    let pool = direction_pool(x, sample, p, n_dirs, seed, stream);
    let count = projection_count(x, sample, p, pool.iter().map(Vec::as_slice));
    Ok(DepthValue::from_count(count, n, DepthKind::Approximate))
}

/// Brute-force planar depth used as a test oracle (p ∈ {1, 2}, n <= 100).
///
/// For p = 2 it tries every normal to a line through two points of
/// `sample ∪ {x}` and every data-to-query direction, each tilted
/// infinitesimally to both sides. Ties are resolved symbolically: a point on
/// the boundary is counted when the tilt moves the halfplane over it.
/// Arithmetic is exact when coordinates are integers of moderate size.
pub fn depth_oracle(x: &[f64], sample: &[Vec<f64>]) -> Result<DepthValue> {
    let n = sample.len();
    non_empty(n)?;
    if n > 100 {
        return Err(Error::Domain("oracle is limited to n <= 100".into()));
    }
    let p = x.len();
    match p {
        1 => {
            let count = [-1.0, 1.0]
                .iter()
                .map(|u| sample.iter().filter(|s| u * s[0] >= u * x[0]).count())
                .min()
                .unwrap();
            Ok(DepthValue::from_count(count, n, DepthKind::Exact))
        }
        2 => {
            let vs: Vec<[f64; 2]> = sample.iter().map(|s| [s[0] - x[0], s[1] - x[1]]).collect();
            let mut anchors: Vec<[f64; 2]> = vec![[0.0, 0.0]];
            anchors.extend(vs.iter().copied());
            let mut candidates: Vec<[f64; 2]> = Vec::new();
            for (i, a) in anchors.iter().enumerate() {
                for b in anchors.iter().skip(i + 1) {
                    let d = [b[0] - a[0], b[1] - a[1]];
                    if d != [0.0, 0.0] {
                        candidates.push([-d[1], d[0]]);
                    }
                }
            }
            candidates.extend(vs.iter().filter(|v| **v != [0.0, 0.0]).copied());
            let mut best = n;
            for c in candidates {
                for u in [c, [-c[0], -c[1]]] {
                    let tilt = [-u[1], u[0]];
                    for w in [tilt, [-tilt[0], -tilt[1]]] {
                        let count = vs
                            .iter()
                            .filter(|v| {
                                let s = u[0] * v[0] + u[1] * v[1];
                                s > 0.0 || (s == 0.0 && w[0] * v[0] + w[1] * v[1] >= 0.0)
                            })
                            .count();
                        best = best.min(count);
                    }
                }
            }
            Ok(DepthValue::from_count(best, n, DepthKind::Exact))
        }
        _ => Err(Error::UnsupportedDimension(p)),
    }
}

/// Closed form used for the depth of a point under N(μ, Σ), as a function of
/// the squared Mahalanobis distance `d`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelDepthForm {
    /// `(1 - F_{χ²_p}(d)) / 2`.
    #[default]
    ChiSquareTail,
    /// `1 - Φ(√d) = (1 - F_{χ²_1}(d)) / 2`, the exact halfspace depth of the
    /// normal in every dimension and the limit of the sample depth. Equal to
    /// `ChiSquareTail` for p = 1; smaller in the tails for p >= 2.
    Halfspace,
}

/// Model depth of `x` under N(μ, Σ) in the default form.
pub fn model_depth_normal(x: &[f64], theta: &ModelParams) -> Result<DepthValue> {
    model_depth_normal_with(x, theta, ModelDepthForm::default())
}

pub fn model_depth_normal_with(x: &[f64], theta: &ModelParams, form: ModelDepthForm) -> Result<DepthValue> {
    let d = mahalanobis_sq(x, theta)?;
    model_depth_from_distance(d, theta.dim(), form)
}

pub fn model_depth_from_distance(d: f64, p: usize, form: ModelDepthForm) -> Result<DepthValue> {
    if p == 0 {
        return Err(Error::Domain("dimension must be positive".into()));
    }
    let dof = match form {
        ModelDepthForm::Halfspace => 1,
        ModelDepthForm::ChiSquareTail => p,
    };
    Ok(DepthValue::model(0.5 * chi2_sf(d, dof)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DepthOptions {
    /// Random directions for p >= 3; `None` means `1000 * p`.
    pub n_dirs: Option<usize>,
    pub seed: u64,
    /// Use the projection approximation even where an exact algorithm exists.
    pub force_approximate: bool,
}

impl DepthOptions {
    pub fn n_dirs_for(&self, p: usize) -> usize {
        self.n_dirs.unwrap_or(1000 * p)
    }
}

/// Finite-sample depths of every observation within its own dataset. These do
/// not depend on the model parameters and are computed once per dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleDepths {
    values: Vec<DepthValue>,
}

impl SampleDepths {
    pub fn compute(data: &Dataset, opts: &DepthOptions) -> Result<Self> {
        let queries = data.rows();
        Ok(SampleDepths {
            values: depth_batch(data, &queries, opts)?,
        })
    }

    pub fn from_values(values: Vec<DepthValue>) -> Self {
        SampleDepths { values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, i: usize) -> DepthValue {
        self.values[i]
    }

    pub fn values(&self) -> &[DepthValue] {
        &self.values
    }
}

/// Depths of many query points against one sample, evaluated in parallel.
/// Approximate depths use direction stream `i` for query `i`.
pub fn depth_batch(data: &Dataset, queries: &[Vec<f64>], opts: &DepthOptions) -> Result<Vec<DepthValue>> {
    let p = data.p();
    non_empty(data.n())?;
    if let Some(q) = queries.iter().find(|q| q.len() != p) {
        return Err(Error::DimensionMismatch {
            expected: p,
            got: q.len(),
        });
    }
    let rows = data.rows();
    if p == 1 && !opts.force_approximate {
        let sample: Vec<f64> = rows.iter().map(|r| r[0]).collect();
        return queries.par_iter().map(|q| depth_exact_1d(q[0], &sample)).collect();
    }
    if p == 2 && !opts.force_approximate {
        let sample: Vec<[f64; 2]> = rows.iter().map(|r| [r[0], r[1]]).collect();
        return queries
            .par_iter()
            .map(|q| depth_exact_2d([q[0], q[1]], &sample))
            .collect();
    }
    let flat: Vec<f64> = rows.concat();
    let n_dirs = opts.n_dirs_for(p);
    queries
        .par_iter()
        .enumerate()
        .map(|(i, q)| depth_approx_stream(q, &flat, p, n_dirs, opts.seed, i as u64))
        .collect()
}
