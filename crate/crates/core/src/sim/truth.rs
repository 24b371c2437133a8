//! Ground-truth trajectories and synthetic bearing measurements.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::config::{Scenario, ScenarioConfig};
use crate::dynamics::{bearing, knots_to_m_per_min, wrap_angle, MotionModel, SensorPos};
use crate::error::{Error, Result};

/// Mixes a base seed with a stream index (SplitMix64 finalizer).
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// True target states for steps `0..=steps`.
#[derive(Debug, Clone, PartialEq)]
pub struct Truth {
    pub states: Vec<DVector<f64>>,
    /// The trajectory left the surveillance region at some step.
    pub left_region: bool,
}

impl Truth {
    pub fn position(&self, k: usize) -> (f64, f64) {
        (self.states[k][0], self.states[k][1])
    }
}

/// Configured initial state: `[x, y, ẋ, ẏ]`, plus `Ω` for the turn scenario.
pub fn initial_state(cfg: &ScenarioConfig) -> DVector<f64> {
    let t = &cfg.target;
    let v = knots_to_m_per_min(t.speed_knots);
    let course = t.course_deg.to_radians();
    let mut s = vec![t.x_km * 1000.0, t.y_km * 1000.0, v * course.sin(), v * course.cos()];
    if cfg.scenario == Scenario::Ct {
        s.push(t.turn_rate_deg_per_min.to_radians());
    }
    DVector::from_vec(s)
}

/// Matrix square root `S` with `S Sᵀ = Q` for a symmetric PSD `Q`.
fn psd_sqrt(q: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(q.clone());
    let roots = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
    eig.eigenvectors * DMatrix::from_diagonal(&roots)
}

fn standard_normals(rng: &mut ChaCha8Rng, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |_, _| StandardNormal.sample(rng))
}

/// Noise-driven trajectory from the configured initial state.
pub fn generate_truth(cfg: &ScenarioConfig, seed: u64) -> Result<Truth> {
    cfg.validate()?;
    let model = cfg.motion_model()?;
    let region = cfg.surveillance_region()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = initial_state(cfg);
    let mut states = Vec::with_capacity(cfg.steps + 1);
    let mut left_region = false;
    states.push(x.clone());
    for _ in 0..cfg.steps {
        let omega = if cfg.scenario == Scenario::Ct { x[4] } else { 0.0 };
        let mut q = model.process_noise(omega);
        if let MotionModel::Ct(_) = model {
            if !cfg.truth_turn_noise {
                q[(4, 4)] = 0.0;
            }
        }
        let noise = psd_sqrt(&q) * standard_normals(&mut rng, x.len());
        x = model.propagate(&x) + noise;
        left_region |= !region.contains(x[0], x[1]);
        states.push(x.clone());
    }
    Ok(Truth { states, left_region })
}

/// Noisy bearings `[step][sensor]` for every sensor at every true state.
/// `r` is the noise variance in rad²; zero gives exact bearings.
pub fn generate_measurements(
    truth: &[DVector<f64>],
    sensors: &[SensorPos],
    r: f64,
    seed: u64,
) -> Result<Vec<Vec<f64>>> {
    if !(r >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "measurement variance {r} must be non-negative"
        )));
    }
    let sigma = r.sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    truth
        .iter()
        .map(|x| {
            sensors
                .iter()
                .map(|s| {
                    let e: f64 = StandardNormal.sample(&mut rng);
                    Ok(wrap_angle(bearing((x[0], x[1]), s)? + sigma * e))
                })
                .collect()
        })
        .collect()
}
