//! Multivariate Gaussian densities and the closed-form operations every
//! fusion rule is assembled from: products, mixture moment matching and the
//! Kullback-Leibler divergence.
//!
//! Covariances are symmetrized after every operation and positive
//! definiteness is established with a Cholesky factorization. Inverses are
//! always taken through that factorization.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};
use crate::fusion::WeightVector;

/// Relative tolerance on `max|P - Pᵀ|` accepted at construction.
pub const SYMMETRY_TOLERANCE: f64 = 1e-9;

/// A multivariate normal density `N(mean, cov)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianDensity {
    mean: DVector<f64>,
    cov: DMatrix<f64>,
}

impl GaussianDensity {
    /// Validates and builds a density. The stored covariance is the exact
    /// symmetric part of `cov`.
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        if mean.is_empty() {
            return Err(Error::Empty("mean vector"));
        }
        if !cov.is_square() {
            return Err(Error::DimensionMismatch {
                expected: cov.nrows(),
                found: cov.ncols(),
            });
        }
        if cov.nrows() != mean.len() {
            return Err(Error::DimensionMismatch {
                expected: mean.len(),
                found: cov.nrows(),
            });
        }
        if mean.iter().chain(cov.iter()).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("gaussian parameters"));
        }
        let scale = cov.amax();
        let asym = (&cov - cov.transpose()).amax();
        if asym > SYMMETRY_TOLERANCE * scale {
            return Err(Error::NotSymmetric("covariance"));
        }
        let mut cov = cov;
        symmetrize(&mut cov);
        factor(&cov, "covariance")?;
        Ok(Self { mean, cov })
    }

    /// Builds a density from a mean slice and a row-major covariance slice.
    pub fn from_slices(mean: &[f64], cov_row_major: &[f64]) -> Result<Self> {
        let n = mean.len();
        if cov_row_major.len() != n * n {
            return Err(Error::LengthMismatch {
                what: "covariance entries",
                expected: n * n,
                found: cov_row_major.len(),
            });
        }
        Self::new(
            DVector::from_column_slice(mean),
            DMatrix::from_row_slice(n, n, cov_row_major),
        )
    }

    /// Symmetrizes `cov` and checks positive definiteness, without the
    /// construction-time symmetry tolerance. Used for results of internal
    /// computations whose asymmetry is rounding only.
    pub(crate) fn from_computed(mean: DVector<f64>, mut cov: DMatrix<f64>, what: &'static str) -> Result<Self> {
        if mean.iter().chain(cov.iter()).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(what));
        }
        symmetrize(&mut cov);
        factor(&cov, what)?;
        Ok(Self { mean, cov })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }

    pub fn into_parts(self) -> (DVector<f64>, DMatrix<f64>) {
        (self.mean, self.cov)
    }

    pub fn cholesky(&self) -> Cholesky<f64, Dyn> {
        // Construction guarantees positive definiteness.
        Cholesky::new(self.cov.clone()).expect("covariance validated at construction")
    }

    /// Inverse covariance.
    pub fn information(&self) -> DMatrix<f64> {
        let mut info = self.cholesky().inverse();
        symmetrize(&mut info);
        info
    }

    pub fn log_det_cov(&self) -> f64 {
        log_det(&self.cholesky())
    }

    /// Natural log of the density at `x`.
    pub fn log_pdf(&self, x: &DVector<f64>) -> f64 {
        let chol = self.cholesky();
        let d = x - &self.mean;
        let maha = d.dot(&chol.solve(&d));
        -0.5 * (maha + log_det(&chol) + self.dim() as f64 * (2.0 * std::f64::consts::PI).ln())
    }

    /// Squared Mahalanobis distance of `x` from the mean.
    pub fn mahalanobis_sq(&self, x: &DVector<f64>) -> f64 {
        let d = x - &self.mean;
        d.dot(&self.cholesky().solve(&d))
    }
}

/// Replaces `m` by `(m + mᵀ) / 2`.
pub fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

pub(crate) fn factor(m: &DMatrix<f64>, what: &'static str) -> Result<Cholesky<f64, Dyn>> {
    Cholesky::new(m.clone()).ok_or(Error::NotPositiveDefinite(what))
}

pub(crate) fn log_det(chol: &Cholesky<f64, Dyn>) -> f64 {
    2.0 * chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>()
}

fn check_dims(densities: &[GaussianDensity]) -> Result<usize> {
    let first = densities.first().ok_or(Error::Empty("density list"))?;
    let n = first.dim();
    for d in densities {
        if d.dim() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: d.dim(),
            });
        }
    }
    Ok(n)
}

/// Normalized product of Gaussians: information matrices add and the mean
/// is the information-weighted combination of the input means.
pub fn gaussian_product(densities: &[GaussianDensity]) -> Result<GaussianDensity> {
    let n = check_dims(densities)?;
    if densities.len() == 1 {
        return Ok(densities[0].clone());
    }
    let mut info = DMatrix::zeros(n, n);
    let mut info_mean = DVector::zeros(n);
    for d in densities {
        let chol = d.cholesky();
        info += chol.inverse();
        info_mean += chol.solve(d.mean());
    }
    symmetrize(&mut info);
    let chol = factor(&info, "information sum")?;
    let mean = chol.solve(&info_mean);
    GaussianDensity::from_computed(mean, chol.inverse(), "product covariance")
}

/// Collapses a weighted Gaussian mixture to the single Gaussian with the
/// same first two moments.
pub fn mixture_moment_match(weights: &WeightVector, densities: &[GaussianDensity]) -> Result<GaussianDensity> {
    let n = check_dims(densities)?;
    if weights.len() != densities.len() {
        return Err(Error::LengthMismatch {
            what: "mixture weights",
            expected: densities.len(),
            found: weights.len(),
        });
    }
    let mut mean = DVector::zeros(n);
    for (w, d) in weights.iter().zip(densities) {
        mean.axpy(w, d.mean(), 1.0);
    }
    let mut cov = DMatrix::zeros(n, n);
    for (w, d) in weights.iter().zip(densities) {
        if w == 0.0 {
            continue;
        }
        let spread = d.mean() - &mean;
        cov += (d.cov() + &spread * spread.transpose()) * w;
    }
    GaussianDensity::from_computed(mean, cov, "moment-matched covariance")
}

/// `KL(p ‖ q)` for two Gaussians in closed form.
pub fn kl_divergence(p: &GaussianDensity, q: &GaussianDensity) -> Result<f64> {
    if p.dim() != q.dim() {
        return Err(Error::DimensionMismatch {
            expected: p.dim(),
            found: q.dim(),
        });
    }
    let n = p.dim() as f64;
    let chol_q = factor(q.cov(), "covariance of q")?;
    let chol_p = p.cholesky();
    let trace = chol_q.solve(p.cov()).trace();
    let diff = p.mean() - q.mean();
    let maha = diff.dot(&chol_q.solve(&diff));
    let value = 0.5 * (trace - n + log_det(&chol_q) - log_det(&chol_p)) + 0.5 * maha;
    // Rounding can push the identical-input case a hair below zero.
    Ok(value.max(0.0))
}

/// Symmetrized divergence `½[KL(p‖q) + KL(q‖p)]`.
pub fn symmetric_kl(p: &GaussianDensity, q: &GaussianDensity) -> Result<f64> {
    Ok(0.5 * (kl_divergence(p, q)? + kl_divergence(q, p)?))
}
