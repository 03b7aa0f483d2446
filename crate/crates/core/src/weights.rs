//! Depth-ratio Pearson residuals and the weights attached to each score term.

use serde::{Deserialize, Serialize};

use crate::depth::{model_depth_from_distance, DepthValue, ModelDepthForm};
use crate::error::{Error, Result};
use crate::estimator::ModelParams;
use crate::numerics::mahalanobis_sq;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightScheme {
    /// `exp(-a δ²)` for `δ <= c`, zero above.
    HFunction,
    /// `(A(δ) + 1) / (δ + 1)` for a residual adjustment function `A`.
    Raf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RafKind {
    Identity,
    Hellinger,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightConfig {
    pub a: f64,
    pub c: f64,
    /// Observations with model depth above `alpha / 2` get full weight.
    pub alpha: f64,
    pub depth_floor: f64,
    pub scheme: WeightScheme,
    pub raf_kind: RafKind,
    pub model_depth: ModelDepthForm,
}

impl Default for WeightConfig {
    fn default() -> Self {
        WeightConfig {
            a: 0.05,
            c: 200.0,
            alpha: 0.5,
            depth_floor: 1e-12,
            scheme: WeightScheme::HFunction,
            raf_kind: RafKind::Hellinger,
            model_depth: ModelDepthForm::ChiSquareTail,
        }
    }
}

impl WeightConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.a > 0.0 && self.a.is_finite()) {
            return Err(Error::Config(format!("a must be > 0, got {}", self.a)));
        }
        if !(self.c > 0.0) {
            return Err(Error::Config(format!("c must be > 0, got {}", self.c)));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::Config(format!("alpha must lie in [0, 1], got {}", self.alpha)));
        }
        if !(self.depth_floor > 0.0) {
            return Err(Error::Config(format!(
                "depth floor must be > 0, got {}",
                self.depth_floor
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct PearsonResidual(pub f64);

impl PearsonResidual {
    pub fn value(self) -> f64 {
        self.0
    }
}

/// `D_n / max(D_model, floor) - 1`.
pub fn pearson_residual(sample_depth: DepthValue, model_depth: DepthValue, depth_floor: f64) -> PearsonResidual {
    PearsonResidual(sample_depth.value / model_depth.value.max(depth_floor) - 1.0)
}

pub fn weight_h(delta: PearsonResidual, a: f64, c: f64) -> f64 {
    let d = delta.0;
    if d <= c {
        (-a * d * d).exp()
    } else {
        0.0
    }
}

/// `(A(δ) + 1) / (δ + 1)` clipped to [0, 1].
pub fn weight_raf(delta: PearsonResidual, raf_kind: RafKind) -> f64 {
    let d = delta.0;
    let w = match raf_kind {
        RafKind::Identity => 1.0,
        RafKind::Hellinger => {
            let s = (1.0 + d).max(0.0).sqrt();
            if s == 0.0 {
                // (2s - 1) / s² diverges to -inf as δ -> -1
                0.0
            } else {
                (2.0 * s - 1.0) / (s * s)
            }
        }
    };
    w.clamp(0.0, 1.0)
}

/// Weight given precomputed sample depth and squared Mahalanobis distance.
pub fn weight_from_distance(sample_depth: DepthValue, dist_sq: f64, p: usize, config: &WeightConfig) -> Result<f64> {
    let model = model_depth_from_distance(dist_sq, p, config.model_depth)?;
    if model.value > config.alpha / 2.0 {
        return Ok(1.0);
    }
    let delta = pearson_residual(sample_depth, model, config.depth_floor);
    Ok(match config.scheme {
        WeightScheme::HFunction => weight_h(delta, config.a, config.c),
        WeightScheme::Raf => weight_raf(delta, config.raf_kind),
    })
}

/// Weight of observation `x` at parameters `theta`.
pub fn observation_weight(
    x: &[f64],
    sample_depth: DepthValue,
    theta: &ModelParams,
    config: &WeightConfig,
) -> Result<f64> {
    let d = mahalanobis_sq(x, theta)?;
    weight_from_distance(sample_depth, d, theta.dim(), config)
}
