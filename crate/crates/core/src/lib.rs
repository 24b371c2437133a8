//! Weighted harmonic-mean-density fusion of Gaussian track densities, with
//! fusion weights chosen to equalize symmetrized KL divergences, and a
//! Monte Carlo simulator of distributed bearings-only tracking over a
//! sonobuoy field.
//!
//! ```
//! use consensus_hmd::{hmd_fuse, GaussianDensity, WeightVector};
//!
//! let a = GaussianDensity::from_slices(&[0.0, 0.0], &[1.0, 0.0, 0.0, 1.0]).unwrap();
//! let b = GaussianDensity::from_slices(&[1.0, 0.0], &[2.0, 0.0, 0.0, 0.5]).unwrap();
//! let fused = hmd_fuse(&[a, b], &WeightVector::uniform(2)).unwrap();
//! assert_eq!(fused.dim(), 2);
//! ```

pub mod dynamics;
pub mod error;
pub mod filtering;
pub mod fusion;
pub mod gaussian;
pub mod network;
pub mod sim;
pub mod validation;

pub use dynamics::{bearing, ct_matrices, cv_matrices, wrap_angle, CtParams, CvParams, MotionModel, SensorPos};
pub use error::{Error, Result};
pub use filtering::{sigma_points, FilterState, SigmaPoint, SigmaPointFilter, SigmaScheme};
pub use fusion::{
    amd_fuse, fuse, gmd_fuse, hmd_fuse, optimize_weights, weight_cost, FusionMethod, FusionReport, OptimizerOptions,
    WeightVector,
};
pub use gaussian::{gaussian_product, kl_divergence, mixture_moment_match, symmetric_kl, GaussianDensity};
pub use network::{bearing_fim, deploy, select_sensors, Deployment, Sensor, SurveillanceRegion, TrackerNode};
pub use sim::{ScenarioConfig, Simulation};
