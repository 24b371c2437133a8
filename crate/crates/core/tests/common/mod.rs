//! Test-only oracles and random instance generators. Nothing here calls the
//! library's own closed forms.
#![allow(dead_code)]

use consensus_hmd::{GaussianDensity, WeightVector};
use nalgebra::{DMatrix, DVector, Matrix2, Vector2};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn normal(rng: &mut impl Rng) -> f64 {
    StandardNormal.sample(rng)
}

pub fn random_spd(n: usize, rng: &mut impl Rng) -> DMatrix<f64> {
    let a = DMatrix::<f64>::from_fn(n, n, |_, _| normal(rng));
    &a * a.transpose() + DMatrix::identity(n, n) * 0.5
}

pub fn random_gaussian(n: usize, rng: &mut impl Rng) -> GaussianDensity {
    let mean = DVector::from_fn(n, |_, _| normal(rng) * 2.0);
    GaussianDensity::new(mean, random_spd(n, rng)).unwrap()
}

fn rotation(theta: f64) -> Matrix2<f64> {
    let (s, c) = theta.sin_cos();
    Matrix2::new(c, -s, s, c)
}

/// Three 2-D Gaussians that roughly agree: means offset by `offset` standard
/// deviations of a shared base covariance, covariances with eigenvalues
/// scaled by factors in `e^{±spread}` along random axes.
pub fn near_agreement_triple(offset: f64, spread: f64, rng: &mut impl Rng) -> Vec<GaussianDensity> {
    let base = random_spd(2, rng);
    let l = base.clone().cholesky().unwrap().l();
    let l2 = Matrix2::new(l[(0, 0)], 0.0, l[(1, 0)], l[(1, 1)]);
    let m0 = Vector2::new(normal(rng), normal(rng));
    (0..3)
        .map(|_| {
            let e = Vector2::new(normal(rng), normal(rng));
            let mean = m0 + l2 * e * offset;
            let r = rotation(rng.random_range(0.0..std::f64::consts::PI));
            let d = Matrix2::new(
                rng.random_range(-spread..spread).exp(),
                0.0,
                0.0,
                rng.random_range(-spread..spread).exp(),
            );
            let cov = l2 * r * d * r.transpose() * l2.transpose();
            GaussianDensity::from_slices(mean.as_slice(), &[cov[(0, 0)], cov[(0, 1)], cov[(1, 0)], cov[(1, 1)]])
                .unwrap()
        })
        .collect()
}

/// `ln N(x; m, P)` via an explicit inverse and determinant.
pub fn log_pdf_2d(x: &Vector2<f64>, d: &GaussianDensity) -> f64 {
    let p = Matrix2::new(d.cov()[(0, 0)], d.cov()[(0, 1)], d.cov()[(1, 0)], d.cov()[(1, 1)]);
    let m = Vector2::new(d.mean()[0], d.mean()[1]);
    let r = x - m;
    let q = (r.transpose() * p.try_inverse().unwrap() * r)[0];
    -0.5 * (q + p.determinant().ln()) - (2.0 * std::f64::consts::PI).ln()
}

/// Mean and covariance of `1 / Σ_j w_j / p_j(x)`, normalized numerically on
/// a uniform grid covering ±`half_width` standard deviations of the widest
/// input around the average input mean.
pub fn hmd_grid_moments(
    densities: &[GaussianDensity],
    weights: &[f64],
    cells: usize,
    half_width: f64,
) -> (Vector2<f64>, Matrix2<f64>) {
    let center = densities
        .iter()
        .fold(Vector2::zeros(), |acc, d| acc + Vector2::new(d.mean()[0], d.mean()[1]))
        / densities.len() as f64;
    let sx = densities.iter().map(|d| d.cov()[(0, 0)].sqrt()).fold(0.0, f64::max) * half_width;
    let sy = densities.iter().map(|d| d.cov()[(1, 1)].sqrt()).fold(0.0, f64::max) * half_width;
    let (hx, hy) = (2.0 * sx / cells as f64, 2.0 * sy / cells as f64);
    let mut samples = Vec::with_capacity(cells * cells);
    let mut max_log = f64::NEG_INFINITY;
    for i in 0..cells {
        for j in 0..cells {
            let x = Vector2::new(
                center[0] - sx + (i as f64 + 0.5) * hx,
                center[1] - sy + (j as f64 + 0.5) * hy,
            );
            // ln h = -ln Σ_j exp(ln w_j - ln p_j)
            let terms: Vec<f64> = densities
                .iter()
                .zip(weights)
                .filter(|(_, &w)| w > 0.0)
                .map(|(d, &w)| w.ln() - log_pdf_2d(&x, d))
                .collect();
            let top = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let lse = top + terms.iter().map(|t| (t - top).exp()).sum::<f64>().ln();
            let log_h = -lse;
            max_log = max_log.max(log_h);
            samples.push((x, log_h));
        }
    }
    let mut mass = 0.0;
    let mut mean = Vector2::zeros();
    for (x, lh) in &samples {
        let h = (lh - max_log).exp();
        mass += h;
        mean += x * h;
    }
    mean /= mass;
    let mut cov = Matrix2::zeros();
    for (x, lh) in &samples {
        let h = (lh - max_log).exp();
        let d = x - mean;
        cov += d * d.transpose() * h;
    }
    (mean, cov / mass)
}

/// Draws from the mixture `Σ w_j N(m_j, P_j)` and returns sample moments.
pub fn mixture_sample_moments(
    weights: &WeightVector,
    densities: &[GaussianDensity],
    samples: usize,
    rng: &mut impl Rng,
) -> (DVector<f64>, DMatrix<f64>) {
    let n = densities[0].dim();
    let factors: Vec<DMatrix<f64>> = densities
        .iter()
        .map(|d| d.cov().clone().cholesky().unwrap().l())
        .collect();
    let mut sum = DVector::zeros(n);
    let mut outer = DMatrix::zeros(n, n);
    for _ in 0..samples {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut j = densities.len() - 1;
        for (i, w) in weights.iter().enumerate() {
            acc += w;
            if u < acc {
                j = i;
                break;
            }
        }
        let e = DVector::from_fn(n, |_, _| normal(rng));
        let x = densities[j].mean() + &factors[j] * e;
        sum += &x;
        outer += &x * x.transpose();
    }
    let m = sum / samples as f64;
    let c = outer / samples as f64 - &m * m.transpose();
    (m, c)
}

/// Closed-form KL written with explicit inverses and determinants.
pub fn kl_explicit(p: &GaussianDensity, q: &GaussianDensity) -> f64 {
    let n = p.dim() as f64;
    let qi = q.cov().clone().try_inverse().unwrap();
    let d = p.mean() - q.mean();
    0.5 * ((&qi * p.cov()).trace() - n
        + (q.cov().determinant() / p.cov().determinant()).ln()
        + (d.transpose() * &qi * &d)[0])
}

/// Relative Frobenius distance.
pub fn rel_frobenius(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).norm() / b.norm()
}

/// `sqrt((a-b)ᵀ P⁻¹ (a-b))`: a mean discrepancy in units of `P`.
pub fn mahalanobis(a: &DVector<f64>, b: &DVector<f64>, p: &DMatrix<f64>) -> f64 {
    let d = a - b;
    (d.transpose() * p.clone().try_inverse().unwrap() * &d)[0].sqrt()
}
