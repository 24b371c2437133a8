//! Monte Carlo error statistics.
//!
//! Inputs are laid out `[run][step]`; per-step outputs average over runs.

use crate::error::{Error, Result};

fn check_runs(values: &[Vec<f64>]) -> Result<usize> {
    let first = values.first().ok_or(Error::Empty("Monte Carlo runs"))?;
    let steps = first.len();
    for v in values {
        if v.len() != steps {
            return Err(Error::LengthMismatch {
                what: "steps per run",
                expected: steps,
                found: v.len(),
            });
        }
    }
    Ok(steps)
}

fn mean_over_runs(values: &[Vec<f64>]) -> Result<Vec<f64>> {
    let steps = check_runs(values)?;
    let m = values.len() as f64;
    Ok((0..steps)
        .map(|k| values.iter().map(|v| v[k]).sum::<f64>() / m)
        .collect())
}

/// Per-step root mean square of errors given as squared norms.
pub fn rmse(squared_errors: &[Vec<f64>]) -> Result<Vec<f64>> {
    Ok(mean_over_runs(squared_errors)?.into_iter().map(f64::sqrt).collect())
}

/// Time average of a per-step RMSE curve.
pub fn armse(rmse: &[f64]) -> Result<f64> {
    if rmse.is_empty() {
        return Err(Error::Empty("RMSE curve"));
    }
    Ok(rmse.iter().sum::<f64>() / rmse.len() as f64)
}

/// Per-step average of normalized estimation errors squared.
pub fn anees(nees: &[Vec<f64>]) -> Result<Vec<f64>> {
    mean_over_runs(nees)
}

/// Two-sided 95% bounds on ANEES for `n_x` states over `m_c` runs.
pub fn anees_bounds(n_x: usize, m_c: usize) -> Result<(f64, f64)> {
    if n_x == 0 || m_c == 0 {
        return Err(Error::InvalidParameter("ANEES bounds need n_x ≥ 1 and M_c ≥ 1".into()));
    }
    let a = 2.0 / (9.0 * n_x as f64 * m_c as f64);
    let nx = n_x as f64;
    Ok((
        nx * (1.0 - a - 1.96 * a.sqrt()).powi(3),
        nx * (1.0 - a + 1.96 * a.sqrt()).powi(3),
    ))
}

/// Percentage of runs whose error exceeds `bound`.
pub fn divergence_pct(final_errors: &[f64], bound: f64) -> Result<f64> {
    if !(bound > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "divergence bound {bound} must be positive"
        )));
    }
    if final_errors.is_empty() {
        return Err(Error::Empty("Monte Carlo runs"));
    }
    let diverged = final_errors.iter().filter(|&&e| !(e <= bound)).count();
    Ok(100.0 * diverged as f64 / final_errors.len() as f64)
}
