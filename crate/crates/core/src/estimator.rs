//! Maximum likelihood and weighted likelihood estimation of (μ, Σ).
//!
//! The weighted estimating equations for the normal model are solved by
//! iterative reweighting. For frozen weights `w_i` the score equations have
//! the closed-form solution
//!
//! ```text
//! μ⁺ = Σ w_i x_i / Σ w_i
//! Σ⁺ = Σ w_i (x_i - μ⁺)(x_i - μ⁺)ᵀ / Σ w_i
//! ```
//!
//! and one iteration recomputes the weights at the current parameters and
//! applies that update.

use nalgebra::{DMatrix, DVector};

use crate::data::Dataset;
use crate::depth::SampleDepths;
use crate::error::{Error, Result};
use crate::numerics::SpdMatrix;
use crate::weights::{weight_from_distance, WeightConfig};

/// Location and scatter of a multivariate normal.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub mu: DVector<f64>,
    pub sigma: SpdMatrix,
}

impl ModelParams {
    pub fn new(mu: DVector<f64>, sigma: SpdMatrix) -> Result<Self> {
        if mu.len() != sigma.dim() {
            return Err(Error::DimensionMismatch {
                expected: sigma.dim(),
                got: mu.len(),
            });
        }
        Ok(ModelParams { mu, sigma })
    }

    pub fn dim(&self) -> usize {
        self.mu.len()
    }

    /// Parameters of `A X + b` when `X ~ N(μ, Σ)`.
    pub fn affine(&self, a: &DMatrix<f64>, b: &DVector<f64>) -> Result<Self> {
        let sigma = a * self.sigma.matrix() * a.transpose();
        ModelParams::new(a * &self.mu + b, SpdMatrix::new(sigma)?)
    }

    /// Normal log-density at `x`.
    pub fn log_density(&self, x: &[f64]) -> f64 {
        let p = self.dim() as f64;
        let diff: Vec<f64> = x.iter().zip(self.mu.iter()).map(|(a, b)| a - b).collect();
        let d = self.sigma.quadratic_form_inv(&diff);
        -0.5 * (p * (2.0 * std::f64::consts::PI).ln() + self.sigma.ln_det() + d)
    }
}

/// Relative change between two parameter values:
/// `max(‖Δμ‖ / (1 + ‖μ‖), ‖ΔΣ‖_F / ‖Σ‖_F)` measured against `from`.
pub fn relative_change(from: &ModelParams, to: &ModelParams) -> f64 {
    let dmu = (&to.mu - &from.mu).norm() / (1.0 + from.mu.norm());
    let dsigma = (to.sigma.matrix() - from.sigma.matrix()).norm() / from.sigma.matrix().norm();
    dmu.max(dsigma)
}

fn weighted_moments(data: &Dataset, weights: &[f64]) -> Result<(DVector<f64>, DMatrix<f64>, f64)> {
    let (n, p) = (data.n(), data.p());
    let x = data.values();
    let total: f64 = weights.iter().sum();
    let mut mu = DVector::zeros(p);
    for i in 0..n {
        if weights[i] > 0.0 {
            mu += x.row(i).transpose() * weights[i];
        }
    }
    mu /= total;
    let mut cov = DMatrix::zeros(p, p);
    for i in 0..n {
        let w = weights[i];
        if w > 0.0 {
            let d = x.row(i).transpose() - &mu;
            cov += &d * d.transpose() * w;
        }
    }
    cov /= total;
    Ok((mu, cov, total))
}

/// Sample mean and covariance with divisor n.
pub fn mle(data: &Dataset) -> Result<ModelParams> {
    let (n, p) = (data.n(), data.p());
    if p == 0 || n < p + 1 {
        return Err(Error::DegenerateSample(format!(
            "need at least p + 1 = {} observations, got {n}",
            p + 1
        )));
    }
    let (mu, cov, _) = weighted_moments(data, &vec![1.0; n])?;
    let sigma = SpdMatrix::new(cov).map_err(|e| match e {
        Error::NotSpd { pivot, .. } => {
            Error::DegenerateSample(format!("sample covariance is singular (pivot {pivot})"))
        }
        other => other,
    })?;
    ModelParams::new(mu, sigma)
}

/// Weights of all observations at `theta`.
pub fn compute_weights(
    data: &Dataset,
    theta: &ModelParams,
    config: &WeightConfig,
    depths: &SampleDepths,
) -> Result<Vec<f64>> {
    if depths.len() != data.n() {
        return Err(Error::DimensionMismatch {
            expected: data.n(),
            got: depths.len(),
        });
    }
    if theta.dim() != data.p() {
        return Err(Error::DimensionMismatch {
            expected: data.p(),
            got: theta.dim(),
        });
    }
    let p = data.p();
    let mut diff = vec![0.0; p];
    (0..data.n())
        .map(|i| {
            for (j, d) in diff.iter_mut().enumerate() {
                *d = data.values()[(i, j)] - theta.mu[j];
            }
            let dist = theta.sigma.quadratic_form_inv(&diff);
            weight_from_distance(depths.get(i), dist, p, config)
        })
        .collect()
}

/// Weighted mean and covariance solving the frozen-weight score equations.
pub fn weighted_update(data: &Dataset, weights: &[f64]) -> Result<ModelParams> {
    let total: f64 = weights.iter().sum();
    if !(total >= data.n() as f64 * 1e-6) {
        return Err(Error::AllDownweighted { weight_sum: total });
    }
    let (mu, cov, _) = weighted_moments(data, weights)?;
    let sigma = SpdMatrix::new(cov).map_err(|e| match e {
        Error::NotSpd { pivot, .. } => Error::DegenerateStep { pivot },
        other => other,
    })?;
    ModelParams::new(mu, sigma)
}

/// One reweighting iteration: weights at `theta`, then the weighted update.
pub fn wlee_step(
    data: &Dataset,
    theta: &ModelParams,
    config: &WeightConfig,
    depths: &SampleDepths,
) -> Result<(ModelParams, Vec<f64>)> {
    let weights = compute_weights(data, theta, config, depths)?;
    let next = weighted_update(data, &weights)?;
    Ok((next, weights))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            tol: 1e-6,
            max_iter: 500,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FitFailure {
    AllDownweighted { weight_sum: f64 },
    DegenerateStep { pivot: usize },
    MaxIterations,
    Other(String),
}

impl std::fmt::Display for FitFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            FitFailure::AllDownweighted { weight_sum } => {
                write!(f, "all observations downweighted (weight sum {weight_sum:e})")
            }
            FitFailure::DegenerateStep { pivot } => write!(f, "non-SPD scatter update (pivot {pivot})"),
            FitFailure::MaxIterations => write!(f, "iteration limit reached"),
            FitFailure::Other(msg) => f.write_str(msg),
        }
    }
}

/// A root of the weighted estimating equations, or the point where the
/// iteration stopped.
#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub theta: ModelParams,
    pub weights: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub weight_sum: f64,
    pub weighted_loglik: f64,
    pub failure: Option<FitFailure>,
}

fn weighted_loglik(data: &Dataset, theta: &ModelParams, weights: &[f64]) -> f64 {
    (0..data.n())
        .filter(|&i| weights[i] > 0.0)
        .map(|i| weights[i] * theta.log_density(&data.row_vec(i)))
        .sum()
}

fn finish(
    data: &Dataset,
    theta: ModelParams,
    weights: Vec<f64>,
    iterations: usize,
    failure: Option<FitFailure>,
) -> FitResult {
    let weight_sum = weights.iter().sum();
    let weighted_loglik = weighted_loglik(data, &theta, &weights);
    FitResult {
        theta,
        weights,
        iterations,
        converged: failure.is_none(),
        weight_sum,
        weighted_loglik,
        failure,
    }
}

/// Iterates [`wlee_step`] from `theta0` until the relative parameter change
/// drops below `opts.tol`. A converged result reports the parameters at which
/// the final step was evaluated, so re-applying the step moves them by less
/// than `tol`.
pub fn wlee_fit(
    data: &Dataset,
    theta0: &ModelParams,
    config: &WeightConfig,
    depths: &SampleDepths,
    opts: &FitOptions,
) -> FitResult {
    let mut theta = theta0.clone();
    for iter in 0..opts.max_iter {
        match wlee_step(data, &theta, config, depths) {
            Ok((next, weights)) => {
                if relative_change(&theta, &next) < opts.tol {
                    return finish(data, theta, weights, iter + 1, None);
                }
                theta = next;
            }
            Err(e) => {
                let failure = match e {
                    Error::AllDownweighted { weight_sum } => FitFailure::AllDownweighted { weight_sum },
                    Error::DegenerateStep { pivot } => FitFailure::DegenerateStep { pivot },
                    other => FitFailure::Other(other.to_string()),
                };
                let weights = compute_weights(data, &theta, config, depths).unwrap_or_default();
                return finish(data, theta, weights, iter, Some(failure));
            }
        }
    }
    let weights = compute_weights(data, &theta, config, depths).unwrap_or_default();
    finish(data, theta, weights, opts.max_iter, Some(FitFailure::MaxIterations))
}
