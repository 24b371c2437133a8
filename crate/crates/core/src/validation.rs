//! Numerical cross-checks of the closed-form KL divergence.
//!
//! Neither check calls into [`crate::gaussian::kl_divergence`]: the 1-D
//! check integrates `p ln(p/q)` by adaptive double-exponential quadrature,
//! the multivariate check averages `ln p(x) − ln q(x)` over samples of `p`.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gaussian::{kl_divergence, GaussianDensity};

fn log_normal_1d(x: f64, mean: f64, var: f64) -> f64 {
    let d = x - mean;
    -0.5 * (d * d / var + var.ln() + (2.0 * std::f64::consts::PI).ln())
}

/// `KL(N(mp, vp) ‖ N(mq, vq))` by quadrature over `mp ± 40√vp`, split into
/// panels one standard deviation wide.
pub fn kl_quadrature_1d(mp: f64, vp: f64, mq: f64, vq: f64) -> Result<f64> {
    if !(vp > 0.0 && vq > 0.0) {
        return Err(Error::NotPositiveDefinite("variance"));
    }
    let sd = vp.sqrt();
    let integrand = |x: f64| {
        let lp = log_normal_1d(x, mp, vp);
        lp.exp() * (lp - log_normal_1d(x, mq, vq))
    };
    let panels = 80;
    let total = (0..panels)
        .map(|i| {
            let a = mp + sd * (i as f64 - 40.0);
            quadrature::integrate(integrand, a, a + sd, 1e-14).integral
        })
        .sum();
    Ok(total)
}

/// Log density evaluated from an explicit Cholesky factor.
struct LogDensity {
    mean: DVector<f64>,
    chol: nalgebra::Cholesky<f64, nalgebra::Dyn>,
    norm: f64,
}

impl LogDensity {
    fn new(d: &GaussianDensity) -> Result<Self> {
        let chol = nalgebra::Cholesky::new(d.cov().clone()).ok_or(Error::NotPositiveDefinite("covariance"))?;
        let log_det: f64 = chol.l().diagonal().iter().map(|v| 2.0 * v.ln()).sum();
        let n = d.dim() as f64;
        Ok(Self {
            mean: d.mean().clone(),
            norm: -0.5 * (log_det + n * (2.0 * std::f64::consts::PI).ln()),
            chol,
        })
    }

    fn eval(&self, x: &DVector<f64>) -> f64 {
        let y = self
            .chol
            .l()
            .solve_lower_triangular(&(x - &self.mean))
            .expect("nonsingular factor");
        self.norm - 0.5 * y.norm_squared()
    }
}

/// Monte Carlo estimate of `KL(p ‖ q)` from `samples` antithetic pairs
/// drawn from `p`.
pub fn kl_monte_carlo(p: &GaussianDensity, q: &GaussianDensity, samples: usize, rng: &mut impl Rng) -> Result<f64> {
    if p.dim() != q.dim() {
        return Err(Error::DimensionMismatch {
            expected: p.dim(),
            found: q.dim(),
        });
    }
    if samples == 0 {
        return Err(Error::Empty("samples"));
    }
    let lp = LogDensity::new(p)?;
    let lq = LogDensity::new(q)?;
    let l: DMatrix<f64> = lp.chol.l();
    let n = p.dim();
    let mut sum = 0.0;
    for _ in 0..samples.div_ceil(2) {
        let e = DVector::from_fn(n, |_, _| StandardNormal.sample(rng));
        let offset = &l * e;
        for x in [p.mean() + &offset, p.mean() - &offset] {
            sum += lp.eval(&x) - lq.eval(&x);
        }
    }
    Ok(sum / (2 * samples.div_ceil(2)) as f64)
}

/// Outcome of [`run_kl_check`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KlCheckReport {
    pub pairs_1d: usize,
    pub pairs_2d: usize,
    pub samples: usize,
    pub max_quadrature_abs_dev: f64,
    pub max_sampling_rel_dev: f64,
    pub identical_case: f64,
    pub quadrature_tolerance: f64,
    pub sampling_tolerance: f64,
    pub passed: bool,
}

pub const QUADRATURE_TOLERANCE: f64 = 1e-6;
pub const SAMPLING_TOLERANCE: f64 = 0.01;

/// Random SPD matrix `A Aᵀ + 0.5 I` with standard normal `A`.
pub fn random_spd(n: usize, rng: &mut impl Rng) -> DMatrix<f64> {
    let a = DMatrix::<f64>::from_fn(n, n, |_, _| StandardNormal.sample(rng));
    &a * a.transpose() + DMatrix::identity(n, n) * 0.5
}

/// Random Gaussian with standard normal mean and [`random_spd`] covariance.
pub fn random_gaussian(n: usize, rng: &mut impl Rng) -> GaussianDensity {
    let mean = DVector::from_fn(n, |_, _| StandardNormal.sample(rng));
    GaussianDensity::new(mean, random_spd(n, rng)).expect("random SPD covariance")
}

/// Compares the closed form against quadrature on `pairs_1d` random 1-D
/// pairs and against `samples`-point sampling on `pairs_2d` random 2-D pairs.
pub fn run_kl_check(seed: u64, pairs_1d: usize, pairs_2d: usize, samples: usize) -> Result<KlCheckReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_quad = 0.0f64;
    for _ in 0..pairs_1d {
        let mp: f64 = rng.random_range(-3.0..3.0);
        let mq: f64 = rng.random_range(-3.0..3.0);
        let vp: f64 = rng.random_range(0.2..5.0);
        let vq: f64 = rng.random_range(0.2..5.0);
        let p = GaussianDensity::from_slices(&[mp], &[vp])?;
        let q = GaussianDensity::from_slices(&[mq], &[vq])?;
        max_quad = max_quad.max((kl_divergence(&p, &q)? - kl_quadrature_1d(mp, vp, mq, vq)?).abs());
    }
    let mut max_rel = 0.0f64;
    for _ in 0..pairs_2d {
        let p = random_gaussian(2, &mut rng);
        let q = random_gaussian(2, &mut rng);
        let closed = kl_divergence(&p, &q)?;
        let sampled = kl_monte_carlo(&p, &q, samples, &mut rng)?;
        max_rel = max_rel.max((closed - sampled).abs() / closed);
    }
    let p = GaussianDensity::from_slices(&[0.3, -1.0], &[2.0, 0.4, 0.4, 1.0])?;
    let identical_case = kl_divergence(&p, &p)?;
    Ok(KlCheckReport {
        pairs_1d,
        pairs_2d,
        samples,
        max_quadrature_abs_dev: max_quad,
        max_sampling_rel_dev: max_rel,
        identical_case,
        quadrature_tolerance: QUADRATURE_TOLERANCE,
        sampling_tolerance: SAMPLING_TOLERANCE,
        passed: max_quad <= QUADRATURE_TOLERANCE && max_rel <= SAMPLING_TOLERANCE && identical_case == 0.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadrature_matches_known_value() {
        // KL(N(0,1) ‖ N(0,2)) = ½(½ − 1 + ln 2).
        let expected = 0.5 * (0.5 - 1.0 + 2f64.ln());
        assert!((kl_quadrature_1d(0.0, 1.0, 0.0, 2.0).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn quadrature_of_identical_is_zero() {
        assert!(kl_quadrature_1d(1.5, 0.3, 1.5, 0.3).unwrap().abs() < 1e-14);
    }

    #[test]
    fn small_check_passes() {
        let r = run_kl_check(7, 20, 2, 200_000).unwrap();
        assert!(r.max_quadrature_abs_dev < 1e-9, "{r:?}");
        assert!(r.max_sampling_rel_dev < 0.02, "{r:?}");
        assert_eq!(r.identical_case, 0.0);
    }
}
