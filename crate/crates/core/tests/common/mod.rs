#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::Rng;

/// erf by its alternating Taylor series (x <= 2) or 1 - erfc from the Laplace
/// continued fraction (x > 2).
pub fn erf(x: f64) -> f64 {
    if x < 0.0 {
        return -erf(-x);
    }
    if x <= 2.0 {
        let mut sum = 0.0;
        let mut power = x;
        for n in 0..200 {
            let term = power / (2 * n + 1) as f64;
            sum += if n % 2 == 0 { term } else { -term };
            power *= x * x / (n + 1) as f64;
            if term < 1e-20 {
                break;
            }
        }
        2.0 / std::f64::consts::PI.sqrt() * sum
    } else {
        1.0 - erfc_cf(x)
    }
}

fn erfc_cf(x: f64) -> f64 {
    let mut t = x;
    for k in (1..=400).rev() {
        t = x + (k as f64 / 2.0) / t;
    }
    (-x * x).exp() / (std::f64::consts::PI.sqrt() * t)
}

/// Random p×p matrix with |det| >= 0.2 and a shift vector.
pub fn random_affine<R: Rng>(rng: &mut R, p: usize) -> (DMatrix<f64>, DVector<f64>) {
    loop {
        let a = DMatrix::from_fn(p, p, |_, _| rng.random_range(-2.0f64..2.0));
        if a.determinant().abs() >= 0.2 {
            let b = DVector::from_fn(p, |_, _| rng.random_range(-10.0f64..10.0));
            return (a, b);
        }
    }
}

pub fn rel_frobenius(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).norm() / b.norm()
}
