//! Sigma-point Gaussian filtering for bearing measurements.
//!
//! Two deterministic point sets are provided: the third-degree spherical
//! cubature rule and the symmetric unscented set with a center point.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dynamics::{bearing, cv_matrices, wrap_angle, MotionModel, SensorPos};
use crate::error::{Error, Result};
use crate::gaussian::GaussianDensity;

/// Deterministic sample-point construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SigmaScheme {
    /// `2n` points at `m ± √n·Lᵢ`, equal weights.
    Cubature3,
    /// `2n + 1` points at `m` and `m ± √(n+κ)·Lᵢ`.
    Unscented { kappa: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SigmaPoint {
    pub point: DVector<f64>,
    pub weight: f64,
}

/// Sigma points whose weighted mean and scatter reproduce `d` exactly.
pub fn sigma_points(d: &GaussianDensity, scheme: SigmaScheme) -> Result<Vec<SigmaPoint>> {
    let n = d.dim();
    let nf = n as f64;
    let l = d.cholesky().unpack();
    let (spread, side_weight, center_weight) = match scheme {
        SigmaScheme::Cubature3 => (nf.sqrt(), 0.5 / nf, None),
        SigmaScheme::Unscented { kappa } => {
            if !(nf + kappa > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "unscented kappa {kappa} needs n + kappa > 0"
                )));
            }
            ((nf + kappa).sqrt(), 0.5 / (nf + kappa), Some(kappa / (nf + kappa)))
        }
    };
    let mut points = Vec::with_capacity(2 * n + 1);
    if let Some(w) = center_weight {
        points.push(SigmaPoint {
            point: d.mean().clone(),
            weight: w,
        });
    }
    for i in 0..n {
        let offset = l.column(i) * spread;
        points.push(SigmaPoint {
            point: d.mean() + &offset,
            weight: side_weight,
        });
        points.push(SigmaPoint {
            point: d.mean() - &offset,
            weight: side_weight,
        });
    }
    Ok(points)
}

/// A tracker's posterior at time index `step`.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterState {
    pub density: GaussianDensity,
    pub step: usize,
}

impl FilterState {
    pub fn new(density: GaussianDensity, step: usize) -> Self {
        Self { density, step }
    }

    pub fn position(&self) -> (f64, f64) {
        let m = self.density.mean();
        (m[0], m[1])
    }
}

/// Sigma-point Kalman filter with a fixed point scheme.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SigmaPointFilter {
    pub scheme: SigmaScheme,
}

impl SigmaPointFilter {
    pub fn new(scheme: SigmaScheme) -> Self {
        Self { scheme }
    }

    /// Time update. The constant-velocity model is linear and propagates
    /// exactly; the coordinated-turn model moves each sigma point with the
    /// transition evaluated at that point's own turn rate.
    pub fn predict(&self, fs: &FilterState, model: &MotionModel) -> Result<FilterState> {
        let d = &fs.density;
        if d.dim() != model.state_dim() {
            return Err(Error::DimensionMismatch {
                expected: model.state_dim(),
                found: d.dim(),
            });
        }
        let (mean, cov) = match model {
            MotionModel::Cv(p) => {
                let (f, q) = cv_matrices(p);
                let cov = &f * d.cov() * f.transpose() + q;
                (&f * d.mean(), cov)
            }
            MotionModel::Ct(_) => {
                let n = d.dim();
                let pts = sigma_points(d, self.scheme)?;
                let moved: Vec<DVector<f64>> = pts.iter().map(|p| model.propagate(&p.point)).collect();
                let mut mean = DVector::zeros(n);
                for (p, x) in pts.iter().zip(&moved) {
                    mean.axpy(p.weight, x, 1.0);
                }
                let mut cov = model.process_noise(d.mean()[4]);
                for (p, x) in pts.iter().zip(&moved) {
                    let dx = x - &mean;
                    cov.ger(p.weight, &dx, &dx, 1.0);
                }
                (mean, cov)
            }
        };
        let density = GaussianDensity::from_computed(mean, cov, "predicted covariance")?;
        Ok(FilterState::new(density, fs.step + 1))
    }

    /// Measurement update with a stacked vector of bearings from `sensors`,
    /// each with noise variance `r` (rad²).
    pub fn update(&self, fs: &FilterState, bearings: &[f64], sensors: &[SensorPos], r: f64) -> Result<FilterState> {
        if bearings.is_empty() {
            return Err(Error::Empty("bearing measurements"));
        }
        if bearings.len() != sensors.len() {
            return Err(Error::LengthMismatch {
                what: "bearing sensors",
                expected: bearings.len(),
                found: sensors.len(),
            });
        }
        if !(r > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "measurement variance {r} must be positive"
            )));
        }
        let m = bearings.len();
        let h = |x: &DVector<f64>| -> Result<DVector<f64>> {
            let pos = (x[0], x[1]);
            let mut z = DVector::zeros(m);
            for (k, s) in sensors.iter().enumerate() {
                z[k] = bearing(pos, s)?;
            }
            Ok(z)
        };
        let noise = DMatrix::identity(m, m) * r;
        self.update_with(fs, &DVector::from_column_slice(bearings), h, &noise, true)
    }

    /// Generic sigma-point measurement update for `z = h(x) + v`,
    /// `v ~ N(0, noise)`. With `angular` set, every measurement component is
    /// treated as an angle and all residuals are wrapped to `(-π, π]`.
    pub fn update_with(
        &self,
        fs: &FilterState,
        z: &DVector<f64>,
        h: impl Fn(&DVector<f64>) -> Result<DVector<f64>>,
        noise: &DMatrix<f64>,
        angular: bool,
    ) -> Result<FilterState> {
        let d = &fs.density;
        let m = z.len();
        if noise.nrows() != m || noise.ncols() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                found: noise.nrows(),
            });
        }
        let residual = |a: f64| if angular { wrap_angle(a) } else { a };

        let pts = sigma_points(d, self.scheme)?;
        let reference = h(d.mean()).map_err(|e| match e {
            Error::DegenerateGeometry(msg) => Error::DegenerateGeometry(format!("predicted mean: {msg}")),
            other => other,
        })?;
        let images = pts.iter().map(|p| h(&p.point)).collect::<Result<Vec<_>>>()?;

        // Predicted measurement, averaged as offsets from the image of the
        // mean so that angles straddling ±π average correctly.
        let mut z_hat = reference.clone();
        for (p, zi) in pts.iter().zip(&images) {
            for k in 0..m {
                z_hat[k] += p.weight * residual(zi[k] - reference[k]);
            }
        }
        z_hat.apply(|v| *v = residual(*v));

        let n = d.dim();
        let mut pzz = noise.clone();
        let mut pxz = DMatrix::zeros(n, m);
        for (p, zi) in pts.iter().zip(&images) {
            let dz = DVector::from_fn(m, |k, _| residual(zi[k] - z_hat[k]));
            let dx = &p.point - d.mean();
            pzz.ger(p.weight, &dz, &dz, 1.0);
            pxz.ger(p.weight, &dx, &dz, 1.0);
        }
        crate::gaussian::symmetrize(&mut pzz);
        let chol = nalgebra::Cholesky::new(pzz.clone()).ok_or(Error::SingularInnovation)?;
        let innovation = DVector::from_fn(m, |k, _| residual(z[k] - z_hat[k]));
        let gain = chol.solve(&pxz.transpose()).transpose();
        let mean = d.mean() + &gain * innovation;
        let cov = d.cov() - &gain * pzz * gain.transpose();
        let density = GaussianDensity::from_computed(mean, cov, "posterior covariance")?;
        Ok(FilterState::new(density, fs.step))
    }
}
