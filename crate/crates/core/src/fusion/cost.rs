//! Dispersion-of-divergence cost: `Σ_i (D_i - D̄)²` where `D_i` is the
//! symmetrized KL divergence between the fused density and input `i`.

use nalgebra::{Cholesky, DMatrix, DVector};

use super::rules::factor_information;
use super::{fuse, FusionMethod, WeightVector};
use crate::error::{Error, Result};
use crate::gaussian::{gaussian_product, symmetric_kl, symmetrize, GaussianDensity};

fn dispersion(divergences: &[f64]) -> f64 {
    let mean = divergences.iter().sum::<f64>() / divergences.len() as f64;
    divergences.iter().map(|d| (d - mean).powi(2)).sum()
}

/// Cost of `weights` under `method`, computed by fusing and evaluating
/// each symmetrized divergence from scratch.
pub fn weight_cost(weights: &WeightVector, densities: &[GaussianDensity], method: FusionMethod) -> Result<f64> {
    let fused = fuse(method, densities, weights)?;
    let divergences = densities
        .iter()
        .map(|p| symmetric_kl(&fused, p))
        .collect::<Result<Vec<_>>>()?;
    Ok(dispersion(&divergences))
}

/// Weight-independent pieces of the cost for a fixed set of densities, so
/// that evaluating many weight vectors stays cheap.
///
/// Means are stored relative to their average to keep the moment-matching
/// outer products well scaled.
#[derive(Debug, Clone)]
pub struct CostEvaluator {
    dim: usize,
    center: DVector<f64>,
    means: Vec<DVector<f64>>,
    covs: Vec<DMatrix<f64>>,
    infos: Vec<DMatrix<f64>>,
    info_sum: DMatrix<f64>,
    info_mean_sum: DVector<f64>,
    info_scale: f64,
    loo_means: Vec<DVector<f64>>,
    loo_covs: Vec<DMatrix<f64>>,
}

/// Fused density in the evaluator's centered frame.
struct Fused {
    mean: DVector<f64>,
    cov: DMatrix<f64>,
    info: DMatrix<f64>,
    jittered: bool,
}

impl CostEvaluator {
    pub fn new(densities: &[GaussianDensity]) -> Result<Self> {
        let first = densities.first().ok_or(Error::Empty("density list"))?;
        let dim = first.dim();
        if let Some(d) = densities.iter().find(|d| d.dim() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: d.dim(),
            });
        }
        let count = densities.len();
        let mut center = DVector::zeros(dim);
        for d in densities {
            center += d.mean();
        }
        center /= count as f64;

        let centered: Vec<GaussianDensity> = densities
            .iter()
            .map(|d| GaussianDensity::from_computed(d.mean() - &center, d.cov().clone(), "covariance"))
            .collect::<Result<_>>()?;
        let means: Vec<_> = centered.iter().map(|d| d.mean().clone()).collect();
        let covs: Vec<_> = centered.iter().map(|d| d.cov().clone()).collect();
        let infos: Vec<_> = centered.iter().map(|d| d.information()).collect();

        let mut info_sum = DMatrix::zeros(dim, dim);
        let mut info_mean_sum = DVector::zeros(dim);
        for (info, mean) in infos.iter().zip(&means) {
            info_sum += info;
            info_mean_sum += info * mean;
        }
        symmetrize(&mut info_sum);
        let info_scale = info_sum.trace() / dim as f64;

        let (mut loo_means, mut loo_covs) = (Vec::new(), Vec::new());
        if count > 1 {
            for j in 0..count {
                let others: Vec<GaussianDensity> = centered
                    .iter()
                    .enumerate()
                    .filter(|&(i, _)| i != j)
                    .map(|(_, d)| d.clone())
                    .collect();
                let (m, p) = gaussian_product(&others)?.into_parts();
                loo_means.push(m);
                loo_covs.push(p);
            }
        }

        Ok(Self {
            dim,
            center,
            means,
            covs,
            infos,
            info_sum,
            info_mean_sum,
            info_scale,
            loo_means,
            loo_covs,
        })
    }

    pub fn len(&self) -> usize {
        self.means.len()
    }

    pub fn is_empty(&self) -> bool {
        self.means.is_empty()
    }

    fn check_weights(&self, weights: &[f64]) -> Result<()> {
        if weights.len() != self.len() {
            return Err(Error::LengthMismatch {
                what: "fusion weights",
                expected: self.len(),
                found: weights.len(),
            });
        }
        Ok(())
    }

    fn fuse_centered(&self, method: FusionMethod, weights: &[f64], allow_jitter: bool) -> Result<Fused> {
        self.check_weights(weights)?;
        if self.len() == 1 {
            return Ok(Fused {
                mean: self.means[0].clone(),
                cov: self.covs[0].clone(),
                info: self.infos[0].clone(),
                jittered: false,
            });
        }
        let n = self.dim;
        match method {
            FusionMethod::Amd => {
                let mean = weighted_sum(weights, &self.means, n);
                let cov = spread_covariance(weights, &self.means, &self.covs, &mean);
                let chol = Cholesky::new(cov.clone()).ok_or(Error::NotPositiveDefinite("AMD covariance"))?;
                Ok(Fused {
                    mean,
                    cov,
                    info: sym_inverse(&chol),
                    jittered: false,
                })
            }
            FusionMethod::Gmd => {
                let mut info = DMatrix::zeros(n, n);
                let mut h = DVector::zeros(n);
                for ((&w, i), m) in weights.iter().zip(&self.infos).zip(&self.means) {
                    if w != 0.0 {
                        info += i * w;
                        h += (i * m) * w;
                    }
                }
                symmetrize(&mut info);
                let chol = Cholesky::new(info.clone()).ok_or(Error::NotPositiveDefinite("Chernoff information"))?;
                Ok(Fused {
                    mean: chol.solve(&h),
                    cov: sym_inverse(&chol),
                    info,
                    jittered: false,
                })
            }
            FusionMethod::Hmd => {
                let eq_mean = weighted_sum(weights, &self.loo_means, n);
                let eq_cov = spread_covariance(weights, &self.loo_means, &self.loo_covs, &eq_mean);
                let eq_chol = Cholesky::new(eq_cov).ok_or(Error::NotPositiveDefinite("moment-matched covariance"))?;
                let mut info = &self.info_sum - sym_inverse(&eq_chol);
                symmetrize(&mut info);
                let h = &self.info_mean_sum - eq_chol.solve(&eq_mean);
                let (chol, jittered) = factor_information(&info, self.info_scale, allow_jitter)?;
                let info = if jittered {
                    let l = chol.l();
                    &l * l.transpose()
                } else {
                    info
                };
                Ok(Fused {
                    mean: chol.solve(&h),
                    cov: sym_inverse(&chol),
                    info,
                    jittered,
                })
            }
        }
    }

    /// Fused density for `weights` under `method`.
    pub fn fused(&self, method: FusionMethod, weights: &[f64], allow_jitter: bool) -> Result<(GaussianDensity, bool)> {
        let f = self.fuse_centered(method, weights, allow_jitter)?;
        let density = GaussianDensity::from_computed(f.mean + &self.center, f.cov, "fused covariance")?;
        Ok((density, f.jittered))
    }

    /// Symmetrized divergences `D_i` between the fused density and each input.
    pub fn divergences(&self, method: FusionMethod, weights: &[f64], allow_jitter: bool) -> Result<(Vec<f64>, bool)> {
        let f = self.fuse_centered(method, weights, allow_jitter)?;
        let n = self.dim as f64;
        // With both directions summed the log-determinants cancel:
        // 2·D_i = ½[tr(P_i⁻¹P_f) + tr(P_f⁻¹P_i) - 2n + dᵀ(P_i⁻¹ + P_f⁻¹)d].
        let divergences = (0..self.len())
            .map(|i| {
                let d = &f.mean - &self.means[i];
                let traces = frobenius_dot(&self.infos[i], &f.cov) + frobenius_dot(&f.info, &self.covs[i]);
                let quad = quadratic_form(&self.infos[i], &d) + quadratic_form(&f.info, &d);
                (0.25 * (traces - 2.0 * n + quad)).max(0.0)
            })
            .collect();
        Ok((divergences, f.jittered))
    }

    /// Dispersion cost and whether jitter was needed.
    pub fn cost(&self, method: FusionMethod, weights: &[f64], allow_jitter: bool) -> Result<(f64, bool)> {
        let (d, jittered) = self.divergences(method, weights, allow_jitter)?;
        Ok((dispersion(&d), jittered))
    }
}

fn weighted_sum(weights: &[f64], vectors: &[DVector<f64>], n: usize) -> DVector<f64> {
    let mut out = DVector::zeros(n);
    for (&w, v) in weights.iter().zip(vectors) {
        if w != 0.0 {
            out.axpy(w, v, 1.0);
        }
    }
    out
}

fn spread_covariance(
    weights: &[f64],
    means: &[DVector<f64>],
    covs: &[DMatrix<f64>],
    center: &DVector<f64>,
) -> DMatrix<f64> {
    let n = center.len();
    let mut cov = DMatrix::zeros(n, n);
    for ((&w, m), p) in weights.iter().zip(means).zip(covs) {
        if w == 0.0 {
            continue;
        }
        cov += p * w;
        let d = m - center;
        cov.ger(w, &d, &d, 1.0);
    }
    symmetrize(&mut cov);
    cov
}

fn sym_inverse(chol: &Cholesky<f64, nalgebra::Dyn>) -> DMatrix<f64> {
    let mut inv = chol.inverse();
    symmetrize(&mut inv);
    inv
}

/// `tr(A B)` for symmetric `A`, `B`.
fn frobenius_dot(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

fn quadratic_form(m: &DMatrix<f64>, v: &DVector<f64>) -> f64 {
    let n = v.len();
    let mut acc = 0.0;
    for j in 0..n {
        let mut col = 0.0;
        for i in 0..n {
            col += m[(i, j)] * v[i];
        }
        acc += col * v[j];
    }
    acc
}
