//! Simplex-constrained minimization of the dispersion cost.
//!
//! Stage one scans a regular lattice on the simplex. Stage two refines the
//! best few lattice local minima by golden-section searches along pairwise
//! transfer directions `e_i - e_j`, halving the search radius whenever a
//! sweep stops improving.

use std::collections::HashMap;

use super::cost::CostEvaluator;
use super::{fuse_guarded, FusionMethod, FusionReport, WeightVector};
use crate::error::{Error, Result};
use crate::gaussian::GaussianDensity;

/// Upper bound on lattice size; larger inputs get a coarser lattice.
const MAX_LATTICE_POINTS: usize = 250_000;
const GOLDEN: f64 = 0.618_033_988_749_894_8;

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerOptions {
    /// Lattice spacing of the coarse scan.
    pub grid_step: f64,
    /// Stop refining once a full sweep improves the cost by less than this.
    pub tolerance: f64,
    /// Costs within this of each other are ties, broken lexicographically.
    pub tie_tolerance: f64,
    pub max_sweeps: usize,
    /// Number of lattice local minima refined; the cost is not convex.
    pub starts: usize,
    /// Let HMD fall back to jitter on an indefinite fused information matrix.
    pub allow_jitter: bool,
}

impl Default for OptimizerOptions {
    fn default() -> Self {
        Self {
            grid_step: 0.05,
            tolerance: 1e-10,
            tie_tolerance: 1e-12,
            max_sweeps: 200,
            starts: 3,
            allow_jitter: true,
        }
    }
}

fn lattice_size(divisions: usize, parts: usize) -> usize {
    // C(divisions + parts - 1, parts - 1), saturating.
    let mut acc: u128 = 1;
    for i in 1..parts {
        acc = acc * (divisions + i) as u128 / i as u128;
        if acc > usize::MAX as u128 {
            return usize::MAX;
        }
    }
    acc as usize
}

/// All points `k / divisions` on the `parts`-simplex, in ascending
/// lexicographic order.
pub fn simplex_lattice(parts: usize, divisions: usize) -> Vec<Vec<f64>> {
    lattice_counts(parts, divisions)
        .into_iter()
        .map(|p| p.iter().map(|&k| k as f64 / divisions as f64).collect())
        .collect()
}

fn lattice_counts(parts: usize, divisions: usize) -> Vec<Vec<usize>> {
    fn recurse(prefix: &mut Vec<usize>, remaining: usize, parts: usize, out: &mut Vec<Vec<usize>>) {
        if prefix.len() + 1 == parts {
            prefix.push(remaining);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for k in 0..=remaining {
            prefix.push(k);
            recurse(prefix, remaining - k, parts, out);
            prefix.pop();
        }
    }
    let mut out = Vec::with_capacity(lattice_size(divisions, parts));
    if parts > 0 {
        recurse(&mut Vec::with_capacity(parts), divisions, parts, &mut out);
    }
    out
}

struct Search<'a> {
    eval: &'a CostEvaluator,
    method: FusionMethod,
    allow_jitter: bool,
}

impl Search<'_> {
    fn cost(&self, w: &[f64]) -> f64 {
        match self.eval.cost(self.method, w, self.allow_jitter) {
            Ok((c, _)) if c.is_finite() => c,
            _ => f64::INFINITY,
        }
    }
}

/// `w` with `t` moved from coordinate `j` to coordinate `i`.
fn transfer(w: &[f64], i: usize, j: usize, t: f64) -> Vec<f64> {
    let mut v = w.to_vec();
    v[i] = (v[i] + t).max(0.0);
    v[j] = (v[j] - t).max(0.0);
    v
}

/// Lattice indices whose cost is no larger than any neighbor one transfer
/// away, in ascending cost order.
fn lattice_minima(points: &[Vec<usize>], costs: &[f64], limit: usize) -> Vec<usize> {
    let index: HashMap<&[usize], usize> = points.iter().enumerate().map(|(k, p)| (p.as_slice(), k)).collect();
    let mut order: Vec<usize> = (0..points.len()).filter(|&k| costs[k].is_finite()).collect();
    // Stable sort keeps lexicographic order among ties.
    order.sort_by(|&a, &b| costs[a].total_cmp(&costs[b]));
    let mut out = Vec::new();
    let mut key = Vec::new();
    for k in order {
        let p = &points[k];
        let mut is_min = true;
        'pairs: for i in 0..p.len() {
            for j in 0..p.len() {
                if i == j || p[j] == 0 {
                    continue;
                }
                key.clone_from(p);
                key[i] += 1;
                key[j] -= 1;
                if costs[index[key.as_slice()]] < costs[k] {
                    is_min = false;
                    break 'pairs;
                }
            }
        }
        if is_min {
            out.push(k);
            if out.len() == limit {
                break;
            }
        }
    }
    out
}

fn golden_section(mut lo: f64, mut hi: f64, tol: f64, f: impl Fn(f64) -> f64) -> (f64, f64) {
    let mut x1 = hi - GOLDEN * (hi - lo);
    let mut x2 = lo + GOLDEN * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > tol {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - GOLDEN * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + GOLDEN * (hi - lo);
            f2 = f(x2);
        }
    }
    if f1 <= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

fn refine(search: &Search, mut w: Vec<f64>, mut cost: f64, step: f64, options: &OptimizerOptions) -> (Vec<f64>, f64) {
    let n = w.len();
    let mut radius = step;
    for _ in 0..options.max_sweeps {
        let start = cost;
        for i in 0..n {
            for j in (i + 1)..n {
                let (lo, hi) = (-w[i].min(radius), w[j].min(radius));
                if hi <= lo {
                    continue;
                }
                let (t, c) = golden_section(lo, hi, 1e-8, |t| search.cost(&transfer(&w, i, j, t)));
                if c < cost {
                    w = transfer(&w, i, j, t);
                    cost = c;
                }
            }
        }
        if start - cost < options.tolerance {
            if radius < 1e-4 {
                break;
            }
            radius *= 0.5;
        }
    }
    (w, cost)
}

/// Finds simplex weights minimizing the dispersion of symmetrized KL
/// divergences between the fused density and each input.
pub fn optimize_weights(
    densities: &[GaussianDensity],
    method: FusionMethod,
    options: &OptimizerOptions,
) -> Result<FusionReport> {
    if !(options.grid_step > 0.0 && options.grid_step <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "grid step {} not in (0, 1]",
            options.grid_step
        )));
    }
    let eval = CostEvaluator::new(densities)?;
    let count = densities.len();
    if count == 1 {
        return Ok(FusionReport {
            fused: densities[0].clone(),
            weights: WeightVector::uniform(1),
            cost: 0.0,
            jitter_applied: false,
        });
    }

    let search = Search {
        eval: &eval,
        method,
        allow_jitter: options.allow_jitter,
    };

    let mut divisions = (1.0 / options.grid_step).round().max(1.0) as usize;
    while divisions > 1 && lattice_size(divisions, count) > MAX_LATTICE_POINTS {
        divisions -= 1;
    }
    let step = 1.0 / divisions as f64;

    let counts = lattice_counts(count, divisions);
    let costs: Vec<f64> = counts
        .iter()
        .map(|p| search.cost(&p.iter().map(|&k| k as f64 * step).collect::<Vec<_>>()))
        .collect();
    let starts = lattice_minima(&counts, &costs, options.starts.max(1));
    if starts.is_empty() {
        return Err(Error::Optimization("fusion failed at every lattice point".into()));
    }

    let mut best: Option<(Vec<f64>, f64)> = None;
    for k in starts {
        let w0 = counts[k].iter().map(|&c| c as f64 * step).collect();
        let (w, c) = refine(&search, w0, costs[k], step, options);
        match &best {
            Some((_, bc)) if c >= bc - options.tie_tolerance => {}
            _ => best = Some((w, c)),
        }
    }
    let (w, _) = best.expect("at least one start");

    let weights = WeightVector::normalized(w);
    let (final_cost, cost_jitter) = eval.cost(method, weights.as_slice(), options.allow_jitter)?;
    let (fused, fuse_jitter) = fuse_guarded(method, densities, &weights, options.allow_jitter)?;
    Ok(FusionReport {
        fused,
        weights,
        cost: final_cost,
        jitter_applied: cost_jitter || fuse_jitter,
    })
}
