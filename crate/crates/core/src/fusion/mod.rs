//! Weighted pooling of Gaussian track densities and the optimizer that picks
//! the pooling weights.

mod cost;
mod optimize;
mod rules;
mod weights;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::GaussianDensity;

pub use cost::{weight_cost, CostEvaluator};
pub use optimize::{optimize_weights, simplex_lattice, OptimizerOptions};
pub use rules::{amd_fuse, gmd_fuse, hmd_fuse, hmd_fuse_guarded, JITTER_ESCALATIONS, JITTER_SCALE};
pub use weights::{WeightVector, SIMPLEX_TOLERANCE};

/// Which weighted mean of densities to pool with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FusionMethod {
    /// Arithmetic mean density, moment matched.
    Amd,
    /// Geometric mean density in Chernoff (inverse-covariance) form.
    Gmd,
    /// Harmonic mean density.
    Hmd,
}

impl FusionMethod {
    pub const ALL: [FusionMethod; 3] = [FusionMethod::Amd, FusionMethod::Gmd, FusionMethod::Hmd];

    pub fn as_str(self) -> &'static str {
        match self {
            FusionMethod::Amd => "amd",
            FusionMethod::Gmd => "gmd",
            FusionMethod::Hmd => "hmd",
        }
    }
}

impl fmt::Display for FusionMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FusionMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "amd" => Ok(FusionMethod::Amd),
            "gmd" | "chernoff" => Ok(FusionMethod::Gmd),
            "hmd" => Ok(FusionMethod::Hmd),
            other => Err(Error::InvalidParameter(format!("unknown fusion method `{other}`"))),
        }
    }
}

/// Outcome of a weight optimization.
#[derive(Debug, Clone, PartialEq)]
pub struct FusionReport {
    pub fused: GaussianDensity,
    pub weights: WeightVector,
    pub cost: f64,
    pub jitter_applied: bool,
}

/// Fuses `densities` with `method`. HMD runs without the jitter fallback.
pub fn fuse(method: FusionMethod, densities: &[GaussianDensity], weights: &WeightVector) -> Result<GaussianDensity> {
    fuse_guarded(method, densities, weights, false).map(|(d, _)| d)
}

/// Like [`fuse`], optionally allowing the HMD jitter fallback. The flag in
/// the result reports whether jitter was added.
pub fn fuse_guarded(
    method: FusionMethod,
    densities: &[GaussianDensity],
    weights: &WeightVector,
    allow_jitter: bool,
) -> Result<(GaussianDensity, bool)> {
    match method {
        FusionMethod::Amd => amd_fuse(densities, weights).map(|d| (d, false)),
        FusionMethod::Gmd => gmd_fuse(densities, weights).map(|d| (d, false)),
        FusionMethod::Hmd => hmd_fuse_guarded(densities, weights, allow_jitter),
    }
}
