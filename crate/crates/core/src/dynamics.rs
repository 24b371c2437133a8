//! Target motion models and the bearing measurement function.
//!
//! Units are meters, minutes and radians throughout. Bearings are measured
//! clockwise from the +Y (north) axis and live in `(-π, π]`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// 1 knot in meters per minute.
pub const METERS_PER_MIN_PER_KNOT: f64 = 30.8667;

/// Below this `|ΩT|` the transition matrix uses series expansions.
pub const SMALL_TURN_THRESHOLD: f64 = 1e-6;
/// Below this `|ΩT|` the coordinated-turn noise terms use series
/// expansions; the direct forms lose precision to cubic cancellation.
const SMALL_TURN_NOISE_THRESHOLD: f64 = 1e-2;

pub fn knots_to_m_per_min(knots: f64) -> f64 {
    knots * METERS_PER_MIN_PER_KNOT
}

pub fn m_per_min_to_knots(v: f64) -> f64 {
    v / METERS_PER_MIN_PER_KNOT
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CvParams {
    /// Sampling interval in minutes.
    pub t: f64,
    /// Acceleration noise intensity, m²/min³.
    pub q1: f64,
}

impl CvParams {
    pub fn new(t: f64, q1: f64) -> Result<Self> {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "sampling interval {t} must be positive"
            )));
        }
        if !(q1 >= 0.0 && q1.is_finite()) {
            return Err(Error::InvalidParameter(format!("q1 = {q1} must be non-negative")));
        }
        Ok(Self { t, q1 })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CtParams {
    pub t: f64,
    pub q1: f64,
    /// Turn-rate noise intensity, rad²/min³.
    pub q2: f64,
}

impl CtParams {
    pub fn new(t: f64, q1: f64, q2: f64) -> Result<Self> {
        CvParams::new(t, q1)?;
        if !(q2 >= 0.0 && q2.is_finite()) {
            return Err(Error::InvalidParameter(format!("q2 = {q2} must be non-negative")));
        }
        Ok(Self { t, q1, q2 })
    }
}

/// Planar sensor (or tracker) location in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensorPos {
    pub x: f64,
    pub y: f64,
}

impl SensorPos {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance_to(&self, x: f64, y: f64) -> f64 {
        (x - self.x).hypot(y - self.y)
    }
}

/// Nearly-constant-velocity transition `F` and process noise `Q` for the
/// state `[x, y, ẋ, ẏ]`.
pub fn cv_matrices(p: &CvParams) -> (DMatrix<f64>, DMatrix<f64>) {
    let t = p.t;
    let mut f = DMatrix::identity(4, 4);
    f[(0, 2)] = t;
    f[(1, 3)] = t;
    let mut q = DMatrix::zeros(4, 4);
    for i in 0..2 {
        q[(i, i)] = t.powi(3) / 3.0;
        q[(i, i + 2)] = t.powi(2) / 2.0;
        q[(i + 2, i)] = t.powi(2) / 2.0;
        q[(i + 2, i + 2)] = t;
    }
    (f, q * p.q1)
}

/// `(sin ΩT / Ω, (1 - cos ΩT) / Ω)`.
fn turn_ratios(omega: f64, t: f64) -> (f64, f64) {
    let x = omega * t;
    if x.abs() < SMALL_TURN_THRESHOLD {
        let x2 = x * x;
        (t * (1.0 - x2 / 6.0 + x2 * x2 / 120.0), t * (x / 2.0 - x * x2 / 24.0))
    } else {
        (x.sin() / omega, (1.0 - x.cos()) / omega)
    }
}

/// Coordinated-turn transition for the state `[x, y, ẋ, ẏ, Ω]`.
pub fn ct_transition(omega: f64, t: f64) -> DMatrix<f64> {
    let (s, c) = turn_ratios(omega, t);
    let (sin, cos) = (omega * t).sin_cos();
    #[rustfmt::skip]
    let f = DMatrix::from_row_slice(5, 5, &[
        1.0, 0.0, s,   -c,   0.0,
        0.0, 1.0, c,    s,   0.0,
        0.0, 0.0, cos, -sin, 0.0,
        0.0, 0.0, sin,  cos, 0.0,
        0.0, 0.0, 0.0,  0.0, 1.0,
    ]);
    f
}

/// Coordinated-turn process noise `diag(q1·Q1(Ω), q2·T)`.
pub fn ct_process_noise(omega: f64, p: &CtParams) -> DMatrix<f64> {
    let t = p.t;
    let x = omega * t;
    // a = 2 s_Ω / Ω³, b = c_Ω / Ω², e = s_Ω / Ω²
    let (a, b, e) = if x.abs() < SMALL_TURN_NOISE_THRESHOLD {
        let x2 = x * x;
        (
            t.powi(3) * (1.0 / 3.0 - x2 / 60.0 + x2 * x2 / 2520.0),
            t.powi(2) * (0.5 - x2 / 24.0 + x2 * x2 / 720.0),
            t.powi(2) * (x / 6.0 - x * x2 / 120.0 + x * x2 * x2 / 5040.0),
        )
    } else {
        let s = x - x.sin();
        let c = 1.0 - x.cos();
        (2.0 * s / omega.powi(3), c / omega.powi(2), s / omega.powi(2))
    };
    #[rustfmt::skip]
    let q1 = DMatrix::from_row_slice(4, 4, &[
        a,   0.0, b,  -e,
        0.0, a,   e,   b,
        b,   e,   t,   0.0,
        -e,  b,   0.0, t,
    ]);
    let mut q = DMatrix::zeros(5, 5);
    q.view_mut((0, 0), (4, 4)).copy_from(&(q1 * p.q1));
    q[(4, 4)] = p.q2 * t;
    q
}

/// `(F, Q)` for the coordinated-turn model at turn rate `omega` (rad/min).
pub fn ct_matrices(omega: f64, p: &CtParams) -> (DMatrix<f64>, DMatrix<f64>) {
    (ct_transition(omega, p.t), ct_process_noise(omega, p))
}

/// Motion model used by both truth generation and the trackers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MotionModel {
    Cv(CvParams),
    Ct(CtParams),
}

impl MotionModel {
    pub fn state_dim(&self) -> usize {
        match self {
            MotionModel::Cv(_) => 4,
            MotionModel::Ct(_) => 5,
        }
    }

    pub fn sampling_interval(&self) -> f64 {
        match self {
            MotionModel::Cv(p) => p.t,
            MotionModel::Ct(p) => p.t,
        }
    }

    /// Noise-free propagation of one state vector.
    pub fn propagate(&self, state: &DVector<f64>) -> DVector<f64> {
        match self {
            MotionModel::Cv(p) => cv_matrices(p).0 * state,
            MotionModel::Ct(p) => ct_transition(state[4], p.t) * state,
        }
    }

    /// Process noise covariance; the turn-rate model evaluates it at `omega`.
    pub fn process_noise(&self, omega: f64) -> DMatrix<f64> {
        match self {
            MotionModel::Cv(p) => cv_matrices(p).1,
            MotionModel::Ct(p) => ct_process_noise(omega, p),
        }
    }
}

/// Maps an angle onto `(-π, π]`.
pub fn wrap_angle(a: f64) -> f64 {
    let r = (a + PI).rem_euclid(2.0 * PI) - PI;
    if r <= -PI {
        r + 2.0 * PI
    } else {
        r
    }
}

/// Bearing of `target` seen from `sensor`, clockwise from north.
pub fn bearing(target: (f64, f64), sensor: &SensorPos) -> Result<f64> {
    let dx = target.0 - sensor.x;
    let dy = target.1 - sensor.y;
    if dx == 0.0 && dy == 0.0 {
        return Err(Error::DegenerateGeometry(format!(
            "target coincides with sensor at ({}, {})",
            sensor.x, sensor.y
        )));
    }
    Ok(wrap_angle(dx.atan2(dy)))
}

/// Gradient of [`bearing`] with respect to the target position:
/// `(Δy, -Δx) / r²`.
pub fn bearing_gradient(target: (f64, f64), sensor: &SensorPos) -> Result<[f64; 2]> {
    let dx = target.0 - sensor.x;
    let dy = target.1 - sensor.y;
    let r2 = dx * dx + dy * dy;
    if r2 == 0.0 {
        return Err(Error::DegenerateGeometry("target coincides with sensor".into()));
    }
    Ok([dy / r2, -dx / r2])
}
