//! Seeded synthetic datasets: Gaussian samples and well-separated clusters.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::numerics::SpdMatrix;

/// Draws `n` rows from N(mean, cov); `cov` is row-major p×p.
pub fn gaussian_rows<R: Rng>(rng: &mut R, n: usize, mean: &[f64], cov: &[f64]) -> Result<Vec<Vec<f64>>> {
    let p = mean.len();
    if cov.len() != p * p {
        return Err(Error::DimensionMismatch {
            expected: p * p,
            got: cov.len(),
        });
    }
    let sigma = SpdMatrix::new(DMatrix::from_row_slice(p, p, cov))?;
    let l = sigma.cholesky_lower();
    Ok((0..n)
        .map(|_| {
            let z: Vec<f64> = (0..p).map(|_| rng.sample(StandardNormal)).collect();
            (0..p)
                .map(|i| mean[i] + (0..=i).map(|k| l[(i, k)] * z[k]).sum::<f64>())
                .collect()
        })
        .collect())
}

pub fn gaussian_dataset<R: Rng>(rng: &mut R, n: usize, mean: &[f64], cov: &[f64]) -> Result<Dataset> {
    Dataset::from_rows(&gaussian_rows(rng, n, mean, cov)?)
}

fn scaled_identity(p: usize, s: f64) -> Vec<f64> {
    let mut m = vec![0.0; p * p];
    for i in 0..p {
        m[i * p + i] = s;
    }
    m
}

/// Component means of the two-cluster analog.
pub const TWO_CLUSTER_MEANS: [[f64; 2]; 2] = [[0.0, 0.0], [4.0, 4.0]];
/// Component means of the three-cluster analog.
pub const THREE_CLUSTER_MEANS: [[f64; 3]; 3] = [[0.0, 0.0, 0.0], [4.0, 4.0, 0.0], [0.0, 4.0, 4.0]];
pub const CLUSTER_VARIANCE: f64 = 0.5;
pub const TWO_CLUSTER_SIZE: usize = 152;
pub const THREE_CLUSTER_SIZE: usize = 100;

/// 152 + 152 bivariate points around (0,0) and (4,4) with covariance 0.5·I.
pub fn two_cluster(seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cov = scaled_identity(2, CLUSTER_VARIANCE);
    let rows: Vec<Vec<f64>> = TWO_CLUSTER_MEANS
        .iter()
        .flat_map(|m| gaussian_rows(&mut rng, TWO_CLUSTER_SIZE, m, &cov).expect("valid covariance"))
        .collect();
    Dataset::from_rows(&rows).expect("finite rows")
}

/// Three trivariate clusters of 100 points with covariance 0.5·I.
pub fn three_cluster(seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cov = scaled_identity(3, CLUSTER_VARIANCE);
    let rows: Vec<Vec<f64>> = THREE_CLUSTER_MEANS
        .iter()
        .flat_map(|m| gaussian_rows(&mut rng, THREE_CLUSTER_SIZE, m, &cov).expect("valid covariance"))
        .collect();
    Dataset::from_rows(&rows).expect("finite rows")
}

/// N(0, I₂) sample of size `n` whose last `n_bad` rows are replaced by
/// draws from N((10, 10), 0.1·I).
pub fn contaminated(seed: u64, n: usize, n_bad: usize) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = gaussian_rows(&mut rng, n - n_bad, &[0.0, 0.0], &scaled_identity(2, 1.0)).expect("identity");
    rows.extend(gaussian_rows(&mut rng, n_bad, &[10.0, 10.0], &scaled_identity(2, 0.1)).expect("valid covariance"));
    Dataset::from_rows(&rows).expect("finite rows")
}
