//! Single-step all-to-all consensus among trackers.

use super::config::WeightMode;
use crate::error::{Error, Result};
use crate::filtering::FilterState;
use crate::fusion::{
    fuse_guarded, optimize_weights, CostEvaluator, FusionMethod, FusionReport, OptimizerOptions, WeightVector,
};
use crate::gaussian::GaussianDensity;

/// Fuses every tracker's posterior into one density. With `feedback` each
/// tracker's state is then replaced by the fused density.
pub fn consensus_step(
    trackers: &mut [FilterState],
    method: FusionMethod,
    mode: WeightMode,
    options: &OptimizerOptions,
    feedback: bool,
) -> Result<FusionReport> {
    let first = trackers.first().ok_or(Error::Empty("trackers"))?;
    let dim = first.density.dim();
    for (id, t) in trackers.iter().enumerate() {
        if t.density.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: t.density.dim(),
            }
            .at_tracker(id));
        }
    }
    let posteriors: Vec<GaussianDensity> = trackers.iter().map(|t| t.density.clone()).collect();
    let report = fuse_posteriors(&posteriors, method, mode, options)?;
    if feedback {
        for t in trackers.iter_mut() {
            t.density = report.fused.clone();
        }
    }
    Ok(report)
}

/// The fusion half of [`consensus_step`] on bare densities.
pub fn fuse_posteriors(
    posteriors: &[GaussianDensity],
    method: FusionMethod,
    mode: WeightMode,
    options: &OptimizerOptions,
) -> Result<FusionReport> {
    match mode {
        WeightMode::Optimized => optimize_weights(posteriors, method, options),
        WeightMode::Equal => {
            let weights = WeightVector::uniform(posteriors.len());
            let (fused, jitter_applied) = fuse_guarded(method, posteriors, &weights, options.allow_jitter)?;
            let (cost, _) = CostEvaluator::new(posteriors)?.cost(method, weights.as_slice(), options.allow_jitter)?;
            Ok(FusionReport {
                fused,
                weights,
                cost,
                jitter_applied,
            })
        }
    }
}
