//! Track initialization from two bearing lines.

use nalgebra::{DMatrix, DVector, Matrix2, Matrix4, Vector4};
use serde::{Deserialize, Serialize};

use crate::dynamics::SensorPos;
use crate::error::{Error, Result};
use crate::gaussian::GaussianDensity;

/// Bearings closer to parallel than this (in `|sin Δ|`) are rejected.
pub const PARALLEL_TOLERANCE: f64 = 1e-6;

fn lambda_parts(z1: f64, z2: f64, s1: &SensorPos, s2: &SensorPos) -> Result<(f64, f64)> {
    let denom = (z2 - z1).sin();
    if denom.abs() < PARALLEL_TOLERANCE {
        return Err(Error::ParallelBearings(denom.abs()));
    }
    let numer = (s2.y - s1.y) * z2.sin() - (s2.x - s1.x) * z2.cos();
    Ok((numer, denom))
}

/// Intersection of the bearing line `z1` from `s1` with `z2` from `s2`.
pub fn triangulate(z1: f64, z2: f64, s1: &SensorPos, s2: &SensorPos) -> Result<(f64, f64)> {
    let (numer, denom) = lambda_parts(z1, z2, s1, s2)?;
    let lambda = numer / denom;
    Ok((s1.x + lambda * z1.sin(), s1.y + lambda * z1.cos()))
}

/// Jacobian of [`triangulate`] with respect to `(z1, z2)`.
pub fn triangulation_jacobian(z1: f64, z2: f64, s1: &SensorPos, s2: &SensorPos) -> Result<Matrix2<f64>> {
    let (numer, denom) = lambda_parts(z1, z2, s1, s2)?;
    let lambda = numer / denom;
    let cos_d = (z2 - z1).cos();
    let dnumer_dz2 = (s2.y - s1.y) * z2.cos() + (s2.x - s1.x) * z2.sin();
    let dl_dz1 = numer * cos_d / (denom * denom);
    let dl_dz2 = dnumer_dz2 / denom - numer * cos_d / (denom * denom);
    let (sin1, cos1) = z1.sin_cos();
    Ok(Matrix2::new(
        lambda * cos1 + sin1 * dl_dz1,
        sin1 * dl_dz2,
        -lambda * sin1 + cos1 * dl_dz1,
        cos1 * dl_dz2,
    ))
}

/// Two bearing pairs from the same two sensors at consecutive steps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitialBearings {
    /// `(z1, z2)` at step 0.
    pub first: (f64, f64),
    /// `(z1, z2)` at step 1.
    pub second: (f64, f64),
}

/// How the velocity part of the initial density is formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VelocityInit {
    /// Differenced velocity with covariance `diag(J R Jᵀ, v_m²/3·I)`.
    Bounded,
    /// The differenced state with the first-order covariance of both
    /// triangulations, conditioned on the `N(0, v_m²/3·I)` velocity prior.
    Combined,
}

/// Parameters shared by every tracker's initialization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitParams {
    /// Bearing noise variance, rad².
    pub r: f64,
    /// Speed bound `v_m`, m/min.
    pub v_max: f64,
    /// Sampling interval, minutes.
    pub t: f64,
    /// Appends a zero turn-rate estimate with this standard deviation.
    pub turn_rate_std: Option<f64>,
    pub velocity: VelocityInit,
}

/// Initial density from two scans of one sensor pair. The state is
/// `[x₀, y₀, (x₁−x₀)/T, (y₁−y₀)/T]` and the position covariance `J R Jᵀ`;
/// see [`VelocityInit`] for the velocity block.
pub fn initialize_track(
    bearings: &InitialBearings,
    s1: &SensorPos,
    s2: &SensorPos,
    params: &InitParams,
) -> Result<GaussianDensity> {
    let InitParams { r, v_max, t, .. } = *params;
    if !(r > 0.0 && v_max > 0.0 && t > 0.0) {
        return Err(Error::InvalidParameter(
            "initialization needs R, v_m and T positive".into(),
        ));
    }
    let (x0, y0) = triangulate(bearings.first.0, bearings.first.1, s1, s2)?;
    let (x1, y1) = triangulate(bearings.second.0, bearings.second.1, s1, s2)?;
    let j0 = triangulation_jacobian(bearings.first.0, bearings.first.1, s1, s2)?;
    let p0 = j0 * j0.transpose() * r;
    let prior_var = v_max * v_max / 3.0;
    let z = Vector4::new(x0, y0, (x1 - x0) / t, (y1 - y0) / t);

    let (mean4, cov4) = match params.velocity {
        VelocityInit::Bounded => {
            let mut c = Matrix4::zeros();
            c.fixed_view_mut::<2, 2>(0, 0).copy_from(&p0);
            c[(2, 2)] = prior_var;
            c[(3, 3)] = prior_var;
            (z, c)
        }
        VelocityInit::Combined => {
            let j1 = triangulation_jacobian(bearings.second.0, bearings.second.1, s1, s2)?;
            let p1 = j1 * j1.transpose() * r;
            let mut c = Matrix4::zeros();
            c.fixed_view_mut::<2, 2>(0, 0).copy_from(&p0);
            c.fixed_view_mut::<2, 2>(0, 2).copy_from(&(-p0 / t));
            c.fixed_view_mut::<2, 2>(2, 0).copy_from(&(-p0 / t));
            c.fixed_view_mut::<2, 2>(2, 2).copy_from(&((p0 + p1) / (t * t)));
            // Condition on the prior as on a direct zero-valued velocity
            // reading with noise v_m²/3.
            let s = c.fixed_view::<2, 2>(2, 2) + Matrix2::identity() * prior_var;
            let chol = s
                .cholesky()
                .ok_or(Error::NotPositiveDefinite("initial velocity innovation"))?;
            let cross = c.fixed_view::<4, 2>(0, 2).into_owned();
            let gain = chol.solve(&cross.transpose()).transpose();
            let mean = z - gain * z.fixed_rows::<2>(2);
            let cov = c - gain * s * gain.transpose();
            (mean, cov)
        }
    };

    let n = if params.turn_rate_std.is_some() { 5 } else { 4 };
    let mut mean = DVector::zeros(n);
    let mut cov = DMatrix::zeros(n, n);
    mean.rows_mut(0, 4).copy_from(&mean4);
    cov.view_mut((0, 0), (4, 4)).copy_from(&cov4);
    if let Some(sd) = params.turn_rate_std {
        cov[(4, 4)] = sd * sd;
    }
    GaussianDensity::from_computed(mean, cov, "initial covariance")
}
