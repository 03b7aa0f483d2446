//! Robust estimation of multivariate normal location and scatter through
//! weighted likelihood estimating equations whose weights compare the
//! finite-sample halfspace (Tukey) depth of each observation with its depth
//! under the fitted normal model.
//!
//! The crate is organised bottom-up:
//!
//! - [`numerics`]: chi-squared distribution functions, SPD factorisation,
//!   squared Mahalanobis distance and confidence-ellipse boundaries.
//! - [`depth`]: finite-sample halfspace depth (exact for p <= 2, random
//!   projection upper bound otherwise) and the closed-form normal depth.
//! - [`weights`]: depth-ratio Pearson residuals and weight functions.
//! - [`estimator`]: maximum likelihood and the reweighting fixed point.
//! - [`roots`]: subsample-seeded multi-start search and root deduplication.
//! - [`cli`]: the command-line front end, with [`data`] and [`synth`]
//!   providing ingestion and synthetic datasets.

// `!(x > 0.0)` guards also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod cli;
pub mod data;
pub mod depth;
pub mod error;
pub mod estimator;
pub mod numerics;
pub mod roots;
pub mod synth;
pub mod weights;

#[cfg(test)]
mod test_oracles;

pub use data::Dataset;
pub use depth::{DepthKind, DepthOptions, DepthValue, ModelDepthForm, SampleDepths};
pub use error::{Error, Result};
pub use estimator::{FitFailure, FitOptions, FitResult, ModelParams};
pub use numerics::{EllipsoidBoundary, SpdMatrix};
pub use roots::{RootSearchConfig, RootSet};
pub use weights::{PearsonResidual, RafKind, WeightConfig, WeightScheme};
