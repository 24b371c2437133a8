//! Reference implementations of the three pooling rules, written directly
//! in terms of the Gaussian primitives.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};
use crate::fusion::WeightVector;
use crate::gaussian::{gaussian_product, mixture_moment_match, symmetrize, GaussianDensity};

/// Relative jitter seed for the HMD indefiniteness guard.
pub const JITTER_SCALE: f64 = 1e-9;
/// Number of ×10 escalations after the first jitter attempt.
pub const JITTER_ESCALATIONS: usize = 3;

fn check_inputs(densities: &[GaussianDensity], weights: &WeightVector) -> Result<usize> {
    let first = densities.first().ok_or(Error::Empty("density list"))?;
    if weights.len() != densities.len() {
        return Err(Error::LengthMismatch {
            what: "fusion weights",
            expected: densities.len(),
            found: weights.len(),
        });
    }
    let n = first.dim();
    if let Some(d) = densities.iter().find(|d| d.dim() != n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: d.dim(),
        });
    }
    Ok(n)
}

/// Factors a fused information matrix. When `allow_jitter` is set and the
/// plain factorization fails, `εI` is added with `ε = JITTER_SCALE · scale`,
/// escalating by ×10 up to [`JITTER_ESCALATIONS`] times.
pub(crate) fn factor_information(
    info: &DMatrix<f64>,
    scale: f64,
    allow_jitter: bool,
) -> Result<(Cholesky<f64, Dyn>, bool)> {
    if let Some(chol) = Cholesky::new(info.clone()) {
        return Ok((chol, false));
    }
    if !allow_jitter {
        return Err(Error::IndefiniteFusion);
    }
    let n = info.nrows();
    let mut eps = JITTER_SCALE * scale;
    for _ in 0..=JITTER_ESCALATIONS {
        let jittered = info + DMatrix::identity(n, n) * eps;
        if let Some(chol) = Cholesky::new(jittered) {
            return Ok((chol, true));
        }
        eps *= 10.0;
    }
    Err(Error::IndefiniteFusion)
}

/// Weighted harmonic-mean-density fusion without the jitter fallback.
pub fn hmd_fuse(densities: &[GaussianDensity], weights: &WeightVector) -> Result<GaussianDensity> {
    hmd_fuse_guarded(densities, weights, false).map(|(d, _)| d)
}

/// Weighted harmonic-mean-density fusion. Returns the fused density and
/// whether jitter had to be added to the fused information matrix.
///
/// Each leave-one-out product `Π_{i≠j} p_i` is formed exactly, the weighted
/// mixture of those products is collapsed to one Gaussian, and that
/// Gaussian is divided out of the full product.
pub fn hmd_fuse_guarded(
    densities: &[GaussianDensity],
    weights: &WeightVector,
    allow_jitter: bool,
) -> Result<(GaussianDensity, bool)> {
    let n = check_inputs(densities, weights)?;
    if densities.len() == 1 {
        return Ok((densities[0].clone(), false));
    }

    let leave_one_out = (0..densities.len())
        .map(|j| {
            let others: Vec<GaussianDensity> = densities
                .iter()
                .enumerate()
                .filter(|&(i, _)| i != j)
                .map(|(_, d)| d.clone())
                .collect();
            gaussian_product(&others)
        })
        .collect::<Result<Vec<_>>>()?;
    let equivalent = mixture_moment_match(weights, &leave_one_out)?;

    let mut info = DMatrix::zeros(n, n);
    let mut info_mean = DVector::zeros(n);
    for d in densities {
        let chol = d.cholesky();
        info += chol.inverse();
        info_mean += chol.solve(d.mean());
    }
    let scale = info.trace() / n as f64;

    let eq_chol = equivalent.cholesky();
    info -= eq_chol.inverse();
    info_mean -= eq_chol.solve(equivalent.mean());
    symmetrize(&mut info);

    let (chol, jittered) = factor_information(&info, scale, allow_jitter)?;
    let mean = chol.solve(&info_mean);
    let fused = GaussianDensity::from_computed(mean, chol.inverse(), "HMD fused covariance")?;
    Ok((fused, jittered))
}

/// Arithmetic pooling: the weighted mixture collapsed to one Gaussian.
pub fn amd_fuse(densities: &[GaussianDensity], weights: &WeightVector) -> Result<GaussianDensity> {
    check_inputs(densities, weights)?;
    mixture_moment_match(weights, densities)
}

/// Geometric pooling in its Chernoff (inverse-covariance) form:
/// `P⁻¹ = Σ w_j P_j⁻¹`, `P⁻¹ m = Σ w_j P_j⁻¹ m_j`.
pub fn gmd_fuse(densities: &[GaussianDensity], weights: &WeightVector) -> Result<GaussianDensity> {
    let n = check_inputs(densities, weights)?;
    if let Some(j) = weights.iter().position(|w| w == 1.0) {
        return Ok(densities[j].clone());
    }
    let mut info = DMatrix::zeros(n, n);
    let mut info_mean = DVector::zeros(n);
    for (w, d) in weights.iter().zip(densities) {
        if w == 0.0 {
            continue;
        }
        let chol = d.cholesky();
        info += chol.inverse() * w;
        info_mean += chol.solve(d.mean()) * w;
    }
    symmetrize(&mut info);
    let chol = Cholesky::new(info).ok_or(Error::NotPositiveDefinite("Chernoff information"))?;
    let mean = chol.solve(&info_mean);
    GaussianDensity::from_computed(mean, chol.inverse(), "Chernoff fused covariance")
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn g(mean: &[f64], cov: &[f64]) -> GaussianDensity {
        GaussianDensity::from_slices(mean, cov).unwrap()
    }

    fn sample_set() -> Vec<GaussianDensity> {
        vec![
            g(&[1.0, 2.0], &[2.0, 0.3, 0.3, 1.0]),
            g(&[1.4, 1.7], &[1.0, -0.2, -0.2, 1.5]),
            g(&[0.8, 2.2], &[3.0, 0.5, 0.5, 0.8]),
        ]
    }

    #[test]
    fn gmd_1d_arithmetic() {
        let fused = gmd_fuse(&[g(&[0.0], &[1.0]), g(&[2.0], &[4.0])], &WeightVector::uniform(2)).unwrap();
        assert_relative_eq!(fused.cov()[(0, 0)], 1.6, epsilon = 1e-14);
        assert_relative_eq!(fused.mean()[0], 0.4, epsilon = 1e-14);
    }

    #[test]
    fn degenerate_weights_pass_through() {
        let set = sample_set();
        for j in 0..set.len() {
            let w = WeightVector::vertex(set.len(), j);
            for fused in [
                hmd_fuse(&set, &w).unwrap(),
                amd_fuse(&set, &w).unwrap(),
                gmd_fuse(&set, &w).unwrap(),
            ] {
                assert_relative_eq!(fused.mean(), set[j].mean(), epsilon = 1e-8);
                assert_relative_eq!(fused.cov(), set[j].cov(), epsilon = 1e-8);
            }
        }
    }

    #[test]
    fn identical_inputs_idempotent() {
        let p = g(&[3.0, -1.0], &[2.0, 0.4, 0.4, 1.0]);
        let set = vec![p.clone(); 4];
        let w = WeightVector::new(vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        for fused in [
            hmd_fuse(&set, &w).unwrap(),
            amd_fuse(&set, &w).unwrap(),
            gmd_fuse(&set, &w).unwrap(),
        ] {
            assert_relative_eq!(fused.mean(), p.mean(), epsilon = 1e-9);
            assert_relative_eq!(fused.cov(), p.cov(), epsilon = 1e-9);
        }
    }

    #[test]
    fn hmd_single_input() {
        let p = g(&[1.0], &[2.0]);
        assert_eq!(hmd_fuse(std::slice::from_ref(&p), &WeightVector::uniform(1)).unwrap(), p);
    }

    #[test]
    fn hmd_is_at_least_as_informative_as_chernoff() {
        // (Σ w A_j)⁻¹ ⪯ Σ w A_j⁻¹ gives P_f⁻¹ ⪰ Σ w P_j⁻¹.
        let set = sample_set();
        let w = WeightVector::new(vec![0.2, 0.5, 0.3]).unwrap();
        let h = hmd_fuse(&set, &w).unwrap().information();
        let c = gmd_fuse(&set, &w).unwrap().information();
        let diff = h - c;
        assert!(diff.symmetric_eigenvalues().min() > -1e-10);
    }

    #[test]
    fn jitter_guard_escalates_then_fails() {
        let indefinite = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1e-12]);
        assert_eq!(
            factor_information(&indefinite, 1.0, false).unwrap_err(),
            Error::IndefiniteFusion
        );
        let (_, jittered) = factor_information(&indefinite, 1.0, true).unwrap();
        assert!(jittered);
        let hopeless = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        assert_eq!(
            factor_information(&hopeless, 1.0, true).unwrap_err(),
            Error::IndefiniteFusion
        );
        let (_, jittered) = factor_information(&DMatrix::identity(2, 2), 1.0, true).unwrap();
        assert!(!jittered);
    }

    #[test]
    fn weight_length_mismatch() {
        let set = sample_set();
        assert!(matches!(
            hmd_fuse(&set, &WeightVector::uniform(2)),
            Err(Error::LengthMismatch { .. })
        ));
        assert!(matches!(hmd_fuse(&[], &WeightVector::uniform(1)), Err(Error::Empty(_))));
    }
}
