//! CSV and JSON artifacts for a Monte Carlo result.
//!
//! `metrics.csv` has one row per step with columns
//! `step,time_min,rmse_pos_m,rmse_vel_knots,anees,l_b,u_b,w_1..w_N` for the
//! fused track. `trackers.csv` holds the standalone trackers in long form.
//! Floats are written with 17 significant digits.

use std::io::{self, Write};

use serde::Serialize;

use super::config::ScenarioConfig;
use super::run::{Aggregate, MonteCarloResult};

/// Formats a float with 17 significant digits, independent of locale.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_metrics_csv<W: Write>(mut w: W, agg: &Aggregate, t: f64) -> io::Result<()> {
    let n = agg.mean_weights.first().map_or(0, Vec::len);
    let mut header = String::from("step,time_min,rmse_pos_m,rmse_vel_knots,anees,l_b,u_b");
    for j in 1..=n {
        header.push_str(&format!(",w_{j}"));
    }
    writeln!(w, "{header}")?;
    let (lb, ub) = agg.anees_bounds;
    for k in 0..agg.fused.rmse_pos_m.len() {
        let mut row = vec![
            k.to_string(),
            fmt_float(k as f64 * t),
            fmt_float(agg.fused.rmse_pos_m[k]),
            fmt_float(agg.fused.rmse_vel_knots[k]),
            fmt_float(agg.fused.anees[k]),
            fmt_float(lb),
            fmt_float(ub),
        ];
        row.extend(agg.mean_weights[k].iter().map(|&x| fmt_float(x)));
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}

pub fn write_trackers_csv<W: Write>(mut w: W, agg: &Aggregate, t: f64) -> io::Result<()> {
    writeln!(w, "tracker,step,time_min,rmse_pos_m,rmse_vel_knots,anees")?;
    for (j, c) in agg.trackers.iter().enumerate() {
        for k in 0..c.rmse_pos_m.len() {
            writeln!(
                w,
                "{},{k},{},{},{},{}",
                j + 1,
                fmt_float(k as f64 * t),
                fmt_float(c.rmse_pos_m[k]),
                fmt_float(c.rmse_vel_knots[k]),
                fmt_float(c.anees[k])
            )?;
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArmseEntry {
    pub pos_m: f64,
    pub vel_knots: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArmseTable {
    pub fused: ArmseEntry,
    pub trackers: Vec<ArmseEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DivergenceTable {
    pub bound_m: f64,
    pub fused_pct: f64,
    pub trackers_pct: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostics {
    pub filter_failures: usize,
    pub fusion_fallbacks: usize,
    pub jitter_steps: usize,
    pub runs_leaving_region: usize,
}

/// The JSON summary: aggregate tables plus the full resolved config.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub seed: u64,
    pub deployment_seed: u64,
    pub runs: usize,
    pub overrides: Vec<String>,
    pub armse: ArmseTable,
    pub divergence: DivergenceTable,
    pub anees_bounds: (f64, f64),
    pub diagnostics: Diagnostics,
    pub config: ScenarioConfig,
}

impl Summary {
    pub fn new(result: &MonteCarloResult, agg: &Aggregate, overrides: Vec<String>) -> Self {
        let entry = |c: &super::run::TrackCurves| ArmseEntry {
            pos_m: c.armse_pos_m(),
            vel_knots: c.armse_vel_knots(),
        };
        let runs = &result.runs;
        Self {
            seed: result.config.seed,
            deployment_seed: result.config.deployment_seed(),
            runs: agg.runs,
            overrides,
            armse: ArmseTable {
                fused: entry(&agg.fused),
                trackers: agg.trackers.iter().map(entry).collect(),
            },
            divergence: DivergenceTable {
                bound_m: result.config.divergence_bound_m,
                fused_pct: agg.fused_divergence_pct,
                trackers_pct: agg.tracker_divergence_pct.clone(),
            },
            anees_bounds: agg.anees_bounds,
            diagnostics: Diagnostics {
                filter_failures: runs.iter().map(|r| r.filter_failures).sum(),
                fusion_fallbacks: runs.iter().map(|r| r.fusion_fallbacks).sum(),
                jitter_steps: runs.iter().map(|r| r.jitter_steps).sum(),
                runs_leaving_region: runs.iter().filter(|r| r.truth_left_region).count(),
            },
            config: result.config.clone(),
        }
    }
}
