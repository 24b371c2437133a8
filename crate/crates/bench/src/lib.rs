//! Deterministic fixtures shared by the benchmarks.

use consensus_hmd::dynamics::{CtParams, CvParams};
use consensus_hmd::filtering::FilterState;
use consensus_hmd::{GaussianDensity, MotionModel, SensorPos};
use nalgebra::{DMatrix, DVector};

/// `n` track densities of dimension `dim` that roughly agree, as posteriors
/// of neighboring trackers do.
pub fn track_densities(n: usize, dim: usize) -> Vec<GaussianDensity> {
    (0..n)
        .map(|j| {
            let s = 1.0 + 0.3 * j as f64;
            let mean = DVector::from_fn(dim, |i, _| 5000.0 + 10.0 * (i as f64 + 1.0) * (j as f64 - 1.5));
            let cov = DMatrix::from_fn(dim, dim, |r, c| {
                let base = if r == c { 100.0 * s * (r as f64 + 1.0) } else { 0.0 };
                base + if r.abs_diff(c) == 1 { 5.0 * s } else { 0.0 }
            });
            GaussianDensity::new(mean, cov).expect("fixture is positive definite")
        })
        .collect()
}

pub fn cv_model() -> MotionModel {
    MotionModel::Cv(CvParams::new(0.25, 1.944).expect("valid parameters"))
}

pub fn ct_model() -> MotionModel {
    MotionModel::Ct(CtParams::new(0.25, 1.944, 0.01).expect("valid parameters"))
}

/// A tracker state for `dim` = 4 (constant velocity) or 5 (coordinated turn).
pub fn tracker_state(dim: usize) -> FilterState {
    let mut mean = vec![8000.0, 7500.0, -230.0, -190.0, (-1.84f64).to_radians()];
    mean.truncate(dim);
    let var = [400.0, 400.0, 900.0, 900.0, 1e-4];
    let d = GaussianDensity::new(
        DVector::from_vec(mean),
        DMatrix::from_diagonal(&DVector::from_row_slice(&var[..dim])),
    )
    .expect("fixture is positive definite");
    FilterState::new(d, 10)
}

pub fn sensor_pair() -> [SensorPos; 2] {
    [SensorPos::new(6000.0, 9000.0), SensorPos::new(9500.0, 5000.0)]
}
