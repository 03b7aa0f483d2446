//! Scalar and matrix primitives: chi-squared distribution functions, SPD
//! factorisation, squared Mahalanobis distance and ellipse boundaries.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::estimator::ModelParams;

const SERIES_EPS: f64 = 1e-16;
const CF_TINY: f64 = 1e-300;
const MAX_TERMS: usize = 10_000;

/// Natural log of the gamma function (Lanczos, g = 7, n = 9).
pub fn ln_gamma(x: f64) -> f64 {
    const G: f64 = 7.0;
    const COEF: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        // reflection
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = COEF[0];
    for (i, c) in COEF.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + G + 0.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

/// Series for the regularized lower incomplete gamma, valid for x < a + 1.
fn gamma_p_series(a: f64, x: f64) -> f64 {
    let mut term = 1.0 / a;
    let mut sum = term;
    let mut ap = a;
    for _ in 0..MAX_TERMS {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if term.abs() < sum.abs() * SERIES_EPS {
            break;
        }
    }
    (sum.ln() - x + a * x.ln() - ln_gamma(a)).exp()
}

/// Modified Lentz continued fraction for the upper incomplete gamma, x >= a + 1.
fn gamma_q_continued_fraction(a: f64, x: f64) -> f64 {
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / CF_TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..MAX_TERMS {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < CF_TINY {
            d = CF_TINY;
        }
        c = b + an / c;
        if c.abs() < CF_TINY {
            c = CF_TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < SERIES_EPS {
            break;
        }
    }
    (h.ln() - x + a * x.ln() - ln_gamma(a)).exp()
}

/// Regularized lower incomplete gamma P(a, x).
pub fn gamma_p(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x < a + 1.0 {
        gamma_p_series(a, x)
    } else {
        1.0 - gamma_q_continued_fraction(a, x)
    }
}

/// Regularized upper incomplete gamma Q(a, x) = 1 - P(a, x).
pub fn gamma_q(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        1.0
    } else if x < a + 1.0 {
        1.0 - gamma_p_series(a, x)
    } else {
        gamma_q_continued_fraction(a, x)
    }
}

fn check_chi2_args(d: f64, dof: usize) -> Result<()> {
    if dof == 0 {
        return Err(Error::Domain("chi-squared degrees of freedom must be >= 1".into()));
    }
    if !(d >= 0.0) {
        return Err(Error::Domain(format!("chi-squared argument must be >= 0, got {d}")));
    }
    Ok(())
}

/// Chi-squared distribution function with `dof` degrees of freedom.
pub fn chi2_cdf(d: f64, dof: usize) -> Result<f64> {
    check_chi2_args(d, dof)?;
    Ok(gamma_p(dof as f64 / 2.0, d / 2.0).clamp(0.0, 1.0))
}

/// Chi-squared survival function `1 - chi2_cdf`, evaluated without cancellation
/// in the upper tail.
pub fn chi2_sf(d: f64, dof: usize) -> Result<f64> {
    check_chi2_args(d, dof)?;
    Ok(gamma_q(dof as f64 / 2.0, d / 2.0).clamp(0.0, 1.0))
}

/// Chi-squared quantile by bisection on [`chi2_cdf`] down to a 1e-12 bracket.
pub fn chi2_quantile(q: f64, dof: usize) -> Result<f64> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::Domain(format!("quantile level must lie in (0, 1), got {q}")));
    }
    if dof == 0 {
        return Err(Error::Domain("chi-squared degrees of freedom must be >= 1".into()));
    }
    let cdf = |x: f64| gamma_p(dof as f64 / 2.0, x / 2.0);
    let mut lo = 0.0;
    let mut hi = dof as f64;
    while cdf(hi) < q {
        lo = hi;
        hi *= 2.0;
    }
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if cdf(mid) < q {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// A symmetric positive definite matrix together with its lower Cholesky factor.
#[derive(Debug, Clone, PartialEq)]
pub struct SpdMatrix {
    matrix: DMatrix<f64>,
    lower: DMatrix<f64>,
}

impl SpdMatrix {
    /// Validates symmetry (1e-12 relative) and factorises. A pivot at or below
    /// `1e-12 * max diagonal` is reported as [`Error::NotSpd`].
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        let p = matrix.nrows();
        if p == 0 || matrix.ncols() != p {
            return Err(Error::DimensionMismatch {
                expected: p.max(1),
                got: matrix.ncols(),
            });
        }
        let scale = matrix.amax();
        if !scale.is_finite() {
            return Err(Error::Domain("matrix has non-finite entries".into()));
        }
        for i in 0..p {
            for j in (i + 1)..p {
                if (matrix[(i, j)] - matrix[(j, i)]).abs() > 1e-12 * scale {
                    return Err(Error::NotSymmetric { row: i, col: j });
                }
            }
        }
        let matrix = (&matrix + matrix.transpose()) * 0.5;
        let lower = cholesky_lower(&matrix)?;
        Ok(SpdMatrix { matrix, lower })
    }

    pub fn identity(p: usize) -> Self {
        SpdMatrix {
            matrix: DMatrix::identity(p, p),
            lower: DMatrix::identity(p, p),
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn cholesky_lower(&self) -> &DMatrix<f64> {
        &self.lower
    }

    /// log |Σ|
    pub fn ln_det(&self) -> f64 {
        2.0 * self.lower.diagonal().iter().map(|v| v.ln()).sum::<f64>()
    }

    /// Solves `L y = v` by forward substitution.
    pub fn solve_lower(&self, v: &[f64]) -> Vec<f64> {
        let p = self.dim();
        let mut y = vec![0.0; p];
        for i in 0..p {
            let mut s = v[i];
            for k in 0..i {
                s -= self.lower[(i, k)] * y[k];
            }
            y[i] = s / self.lower[(i, i)];
        }
        y
    }

    /// `vᵀ Σ⁻¹ v` through the Cholesky factor.
    pub fn quadratic_form_inv(&self, v: &[f64]) -> f64 {
        self.solve_lower(v).iter().map(|y| y * y).sum()
    }
}

fn cholesky_lower(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let p = a.nrows();
    let max_diag = a.diagonal().iter().cloned().fold(0.0_f64, f64::max);
    let threshold = 1e-12 * max_diag;
    let mut l = DMatrix::<f64>::zeros(p, p);
    for j in 0..p {
        let mut pivot = a[(j, j)];
        for k in 0..j {
            pivot -= l[(j, k)] * l[(j, k)];
        }
        if !(pivot > threshold) || max_diag <= 0.0 {
            return Err(Error::NotSpd { pivot: j, value: pivot });
        }
        let ljj = pivot.sqrt();
        l[(j, j)] = ljj;
        for i in (j + 1)..p {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / ljj;
        }
    }
    Ok(l)
}

/// Squared Mahalanobis distance `(x - μ)ᵀ Σ⁻¹ (x - μ)`.
pub fn mahalanobis_sq(x: &[f64], theta: &ModelParams) -> Result<f64> {
    let p = theta.dim();
    if x.len() != p {
        return Err(Error::DimensionMismatch {
            expected: p,
            got: x.len(),
        });
    }
    let diff: Vec<f64> = x.iter().zip(theta.mu.iter()).map(|(a, b)| a - b).collect();
    Ok(theta.sigma.quadratic_form_inv(&diff))
}

/// Boundary of a normal confidence region. For p = 2 there is a single slice;
/// for p = 3 there are three slices through μ spanned by pairs of principal axes.
#[derive(Debug, Clone)]
pub struct EllipsoidBoundary {
    pub level: f64,
    pub quantile: f64,
    pub slices: Vec<Vec<DVector<f64>>>,
}

impl EllipsoidBoundary {
    pub fn points(&self) -> impl Iterator<Item = &DVector<f64>> {
        self.slices.iter().flatten()
    }
}

pub fn ellipsoid_boundary(theta: &ModelParams, level: f64, n_points: usize) -> Result<EllipsoidBoundary> {
    let p = theta.dim();
    if p != 2 && p != 3 {
        return Err(Error::UnsupportedDimension(p));
    }
    if n_points == 0 {
        return Err(Error::Domain("n_points must be >= 1".into()));
    }
    let quantile = chi2_quantile(level, p)?;
    let radius = quantile.sqrt();
    let angle = |k: usize| 2.0 * std::f64::consts::PI * k as f64 / n_points as f64;

    let slices = if p == 2 {
        let l = theta.sigma.cholesky_lower();
        let slice = (0..n_points)
            .map(|k| {
                let t = angle(k);
                let u = DVector::from_vec(vec![radius * t.cos(), radius * t.sin()]);
                &theta.mu + l * u
            })
            .collect();
        vec![slice]
    } else {
        let eig = SymmetricEigen::new(theta.sigma.matrix().clone());
        let axis = |i: usize| eig.eigenvectors.column(i) * eig.eigenvalues[i].sqrt();
        [(0, 1), (0, 2), (1, 2)]
            .iter()
            .map(|&(i, j)| {
                let (ai, aj) = (axis(i), axis(j));
                (0..n_points)
                    .map(|k| {
                        let t = angle(k);
                        &theta.mu + (&ai * t.cos() + &aj * t.sin()) * radius
                    })
                    .collect()
            })
            .collect()
    };
    Ok(EllipsoidBoundary {
        level,
        quantile,
        slices,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn params(mu: Vec<f64>, sigma: DMatrix<f64>) -> ModelParams {
        ModelParams::new(DVector::from_vec(mu), SpdMatrix::new(sigma).unwrap()).unwrap()
    }

    // series and continued-fraction erf, independent of the incomplete gamma code
    fn chi2_cdf_dof1_oracle(d: f64) -> f64 {
        crate::test_oracles::erf((d / 2.0).sqrt())
    }

    #[test]
    fn chi2_cdf_examples() {
        assert_eq!(chi2_cdf(0.0, 2).unwrap(), 0.0);
        assert!((chi2_cdf(2.0, 2).unwrap() - (1.0 - (-1.0f64).exp())).abs() < 1e-14);
        assert!((chi2_cdf(2.0, 2).unwrap() - 0.632120558829).abs() < 1e-12);
        assert!((chi2_cdf(1.0, 1).unwrap() - chi2_cdf_dof1_oracle(1.0)).abs() < 1e-12);
        assert!((chi2_cdf(1.0, 1).unwrap() - 0.682689492137).abs() < 1e-12);
    }

    #[test]
    fn chi2_cdf_domain_errors() {
        assert!(matches!(chi2_cdf(-1.0, 2), Err(Error::Domain(_))));
        assert!(matches!(chi2_cdf(1.0, 0), Err(Error::Domain(_))));
        assert!(matches!(chi2_cdf(f64::NAN, 2), Err(Error::Domain(_))));
    }

    #[test]
    fn chi2_sf_tail() {
        // sf(d, 2) = exp(-d/2) has no cancellation in the tail
        let sf = chi2_sf(60.0, 2).unwrap();
        assert!((sf / (-30.0f64).exp() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn chi2_quantile_examples() {
        assert!((chi2_quantile(0.95, 2).unwrap() - (-2.0 * 0.05f64.ln())).abs() < 1e-10);
        assert!((chi2_quantile(0.95, 2).unwrap() - 5.991464547).abs() < 1e-8);
        assert!((chi2_quantile(0.5, 2).unwrap() - 1.386294361).abs() < 1e-8);
        assert!(chi2_quantile(0.0, 2).is_err());
        assert!(chi2_quantile(1.0, 2).is_err());
    }

    #[test]
    fn ln_gamma_known_values() {
        assert!(ln_gamma(1.0).abs() < 1e-14);
        assert!(ln_gamma(2.0).abs() < 1e-14);
        assert!((ln_gamma(0.5) - std::f64::consts::PI.sqrt().ln()).abs() < 1e-14);
        assert!((ln_gamma(10.0) - 362_880f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn mahalanobis_examples() {
        let t = params(vec![0.0, 0.0], DMatrix::identity(2, 2));
        assert_eq!(mahalanobis_sq(&[3.0, 4.0], &t).unwrap(), 25.0);
        assert_eq!(mahalanobis_sq(&[0.0, 0.0], &t).unwrap(), 0.0);
        let t = params(
            vec![0.0, 0.0],
            DMatrix::from_diagonal(&DVector::from_vec(vec![4.0, 1.0])),
        );
        assert!((mahalanobis_sq(&[2.0, 0.0], &t).unwrap() - 1.0).abs() < 1e-15);
        assert!(mahalanobis_sq(&[1.0], &t).is_err());
    }

    #[test]
    fn spd_rejects_singular_with_pivot() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        assert!(matches!(SpdMatrix::new(m), Err(Error::NotSpd { pivot: 1, .. })));
        let m = DMatrix::from_row_slice(2, 2, &[-1.0, 0.0, 0.0, 1.0]);
        assert!(matches!(SpdMatrix::new(m), Err(Error::NotSpd { pivot: 0, .. })));
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.4, 1.0]);
        assert!(matches!(SpdMatrix::new(m), Err(Error::NotSymmetric { .. })));
    }

    #[test]
    fn ellipse_is_circle_for_identity() {
        let t = params(vec![0.0, 0.0], DMatrix::identity(2, 2));
        for (level, q) in [(0.95, -2.0 * 0.05f64.ln()), (0.5, -2.0 * 0.5f64.ln())] {
            let b = ellipsoid_boundary(&t, level, 64).unwrap();
            assert_eq!(b.points().count(), 64);
            for z in b.points() {
                assert!((z.norm() - q.sqrt()).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn ellipsoid_three_slices_on_boundary() {
        let sigma = DMatrix::from_row_slice(3, 3, &[2.0, 0.3, 0.1, 0.3, 1.0, -0.2, 0.1, -0.2, 0.5]);
        let t = params(vec![1.0, -1.0, 2.0], sigma);
        let b = ellipsoid_boundary(&t, 0.95, 50).unwrap();
        assert_eq!(b.slices.len(), 3);
        for z in b.points() {
            let d = mahalanobis_sq(z.as_slice(), &t).unwrap();
            assert!((d - b.quantile).abs() < 1e-8);
        }
    }

    #[test]
    fn ellipsoid_unsupported_dimension() {
        let t = params(vec![0.0; 4], DMatrix::identity(4, 4));
        assert!(matches!(
            ellipsoid_boundary(&t, 0.95, 10),
            Err(Error::UnsupportedDimension(4))
        ));
    }

    proptest! {
        #[test]
        fn chi2_cdf_monotone(d in 0.0f64..80.0, step in 0.0f64..5.0, dof in 1usize..12) {
            let a = chi2_cdf(d, dof).unwrap();
            let b = chi2_cdf(d + step, dof).unwrap();
            prop_assert!((0.0..=1.0).contains(&a));
            prop_assert!(b >= a);
        }

        #[test]
        fn quantile_inverts_cdf(x in 0.05f64..30.0, dof in 1usize..8) {
            let q = chi2_cdf(x, dof).unwrap();
            prop_assume!(q > 1e-6 && q < 1.0 - 1e-6);
            let back = chi2_quantile(q, dof).unwrap();
            prop_assert!((chi2_cdf(back, dof).unwrap() - q).abs() < 1e-10);
        }

        #[test]
        fn mahalanobis_affine_invariant(
            entries in proptest::collection::vec(-2.0f64..2.0, 4),
            shift in proptest::collection::vec(-5.0f64..5.0, 2),
            x in proptest::collection::vec(-3.0f64..3.0, 2),
        ) {
            let a = DMatrix::from_row_slice(2, 2, &entries);
            prop_assume!(a.determinant().abs() > 0.1);
            let sigma = DMatrix::from_row_slice(2, 2, &[1.5, 0.4, 0.4, 0.8]);
            let mu = DVector::from_vec(vec![0.3, -0.7]);
            let t = params(mu.as_slice().to_vec(), sigma.clone());
            let b = DVector::from_vec(shift);
            let t2 = params(
                (&a * &mu + &b).as_slice().to_vec(),
                &a * &sigma * a.transpose(),
            );
            let xv = DVector::from_vec(x);
            let d1 = mahalanobis_sq(xv.as_slice(), &t).unwrap();
            let d2 = mahalanobis_sq((&a * &xv + &b).as_slice(), &t2).unwrap();
            prop_assert!((d1 - d2).abs() < 1e-8 * (1.0 + d1));
        }
    }
}
