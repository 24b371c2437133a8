//! Sonobuoy field deployment, tracker placement and sensor activation.

use nalgebra::Matrix2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dynamics::{bearing_gradient, SensorPos};
use crate::error::{Error, Result};

/// Minimum sensors each sub-region must receive for a deployment to be kept.
pub const MIN_SENSORS_PER_TRACKER: usize = 2;
/// Redraw budget for [`deploy`].
pub const MAX_REDRAWS: usize = 100;

/// Rectangular surveillance area split into a grid of equal sub-regions,
/// one tracker each.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurveillanceRegion {
    /// Meters.
    pub width: f64,
    /// Meters.
    pub height: f64,
    pub sub_rows: usize,
    pub sub_cols: usize,
}

impl SurveillanceRegion {
    pub fn new(width: f64, height: f64, sub_rows: usize, sub_cols: usize) -> Result<Self> {
        if !(width > 0.0 && height > 0.0 && width.is_finite() && height.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "region {width} x {height} must be positive"
            )));
        }
        if sub_rows == 0 || sub_cols == 0 {
            return Err(Error::InvalidParameter("region needs at least one sub-region".into()));
        }
        Ok(Self {
            width,
            height,
            sub_rows,
            sub_cols,
        })
    }

    pub fn tracker_count(&self) -> usize {
        self.sub_rows * self.sub_cols
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        (0.0..=self.width).contains(&x) && (0.0..=self.height).contains(&y)
    }

    /// Sub-region centers, row-major from the south-west corner.
    pub fn tracker_positions(&self) -> Vec<SensorPos> {
        let cw = self.width / self.sub_cols as f64;
        let ch = self.height / self.sub_rows as f64;
        (0..self.sub_rows)
            .flat_map(|r| (0..self.sub_cols).map(move |c| SensorPos::new((c as f64 + 0.5) * cw, (r as f64 + 0.5) * ch)))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sensor {
    pub id: usize,
    pub pos: SensorPos,
    pub tracker_id: usize,
    pub active: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackerNode {
    pub id: usize,
    pub pos: SensorPos,
    pub sensor_ids: Vec<usize>,
}

/// A sensor field together with its trackers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Deployment {
    pub region: SurveillanceRegion,
    pub seed: u64,
    pub sensors: Vec<Sensor>,
    pub trackers: Vec<TrackerNode>,
}

impl Deployment {
    /// Assembles a deployment from explicit sensor coordinates, assigning
    /// each sensor to its nearest tracker (lowest id on ties).
    pub fn from_positions(region: SurveillanceRegion, seed: u64, positions: &[SensorPos]) -> Result<Self> {
        let sites = region.tracker_positions();
        let mut trackers: Vec<TrackerNode> = sites
            .iter()
            .enumerate()
            .map(|(id, &pos)| TrackerNode {
                id,
                pos,
                sensor_ids: Vec::new(),
            })
            .collect();
        let mut sensors = Vec::with_capacity(positions.len());
        for (id, &pos) in positions.iter().enumerate() {
            if !(pos.x.is_finite() && pos.y.is_finite()) || !region.contains(pos.x, pos.y) {
                return Err(Error::Deployment(format!(
                    "sensor {id} at ({}, {}) is outside the region",
                    pos.x, pos.y
                )));
            }
            let tracker_id = nearest(&sites, pos);
            trackers[tracker_id].sensor_ids.push(id);
            sensors.push(Sensor {
                id,
                pos,
                tracker_id,
                active: false,
            });
        }
        Ok(Self {
            region,
            seed,
            sensors,
            trackers,
        })
    }

    pub fn sensor_positions(&self, ids: &[usize]) -> Vec<SensorPos> {
        ids.iter().map(|&i| self.sensors[i].pos).collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("deployment serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let d: Deployment = serde_json::from_str(s).map_err(|e| Error::Deployment(e.to_string()))?;
        // Re-derive assignments so a hand-edited file cannot break the partition.
        let positions: Vec<SensorPos> = d.sensors.iter().map(|s| s.pos).collect();
        Self::from_positions(d.region, d.seed, &positions)
    }
}

fn nearest(sites: &[SensorPos], pos: SensorPos) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (i, s) in sites.iter().enumerate() {
        let d = s.distance_to(pos.x, pos.y);
        if d < best_d {
            best = i;
            best_d = d;
        }
    }
    best
}

/// Scatters `n_s` sensors uniformly over the region and attaches each to its
/// nearest tracker. The whole field is redrawn until every tracker owns at
/// least [`MIN_SENSORS_PER_TRACKER`] sensors.
pub fn deploy(region: SurveillanceRegion, n_s: usize, seed: u64) -> Result<Deployment> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..MAX_REDRAWS {
        let positions: Vec<SensorPos> = (0..n_s)
            .map(|_| SensorPos::new(rng.random::<f64>() * region.width, rng.random::<f64>() * region.height))
            .collect();
        let d = Deployment::from_positions(region, seed, &positions)?;
        if d.trackers.iter().all(|t| t.sensor_ids.len() >= MIN_SENSORS_PER_TRACKER) {
            return Ok(d);
        }
    }
    Err(Error::Deployment(format!(
        "no draw of {n_s} sensors gave every tracker {MIN_SENSORS_PER_TRACKER} sensors in {MAX_REDRAWS} attempts"
    )))
}

/// Fisher information of the target position carried by bearings from
/// `sensors`: `Σ gᵢgᵢᵀ / R` with `gᵢ` the bearing gradient at `prior`.
pub fn bearing_fim(prior: (f64, f64), sensors: &[SensorPos], r: f64) -> Result<Matrix2<f64>> {
    if !(r > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "measurement variance {r} must be positive"
        )));
    }
    let mut fim = Matrix2::zeros();
    for s in sensors {
        let [gx, gy] = bearing_gradient(prior, s)?;
        fim[(0, 0)] += gx * gx / r;
        fim[(0, 1)] += gx * gy / r;
        fim[(1, 1)] += gy * gy / r;
    }
    fim[(1, 0)] = fim[(0, 1)];
    Ok(fim)
}

/// Trace of the inverse FIM, or infinity when the FIM is singular.
pub fn crlb_trace(fim: &Matrix2<f64>) -> f64 {
    let det = fim.determinant();
    let scale = fim.trace().powi(2);
    if det <= 1e-12 * scale || det <= 0.0 {
        f64::INFINITY
    } else {
        fim.trace() / det
    }
}

/// Outcome of sensor activation for one tracker.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Selection {
    /// Sensor ids, ascending.
    pub ids: Vec<usize>,
    pub crlb_trace: f64,
    /// Every candidate subset had a singular FIM; `ids` maximizes det(FIM).
    pub degenerate: bool,
}

/// Largest subset size searched exhaustively; above it selection is greedy.
pub const EXHAUSTIVE_SELECTION_LIMIT: usize = 4;

/// Chooses the `n` sensors of `tracker` that minimize the CRLB trace at
/// `prior`. Exhaustive for `n ≤ 4` with ties going to the smallest id tuple.
pub fn select_sensors(
    tracker: &TrackerNode,
    deployment: &Deployment,
    prior: (f64, f64),
    n: usize,
    r: f64,
) -> Result<Selection> {
    let mut candidates = tracker.sensor_ids.clone();
    candidates.sort_unstable();
    if n == 0 || candidates.len() < n {
        return Err(Error::InvalidParameter(format!(
            "tracker {} has {} sensors, cannot activate {n}",
            tracker.id,
            candidates.len()
        )));
    }
    let positions: Vec<SensorPos> = candidates.iter().map(|&i| deployment.sensors[i].pos).collect();
    let rank1: Vec<Matrix2<f64>> = positions
        .iter()
        .map(|s| bearing_fim(prior, std::slice::from_ref(s), r))
        .collect::<Result<_>>()?;

    let subset_fim = |idx: &[usize]| idx.iter().fold(Matrix2::zeros(), |acc, &i| acc + rank1[i]);

    let chosen: Vec<usize> = if n <= EXHAUSTIVE_SELECTION_LIMIT {
        let mut best: Option<(Vec<usize>, f64, f64)> = None;
        for_each_combination(candidates.len(), n, |idx| {
            let fim = subset_fim(idx);
            let trace = crlb_trace(&fim);
            let det = fim.determinant();
            let better = match &best {
                None => true,
                Some((_, bt, bd)) => {
                    if trace.is_finite() || bt.is_finite() {
                        trace < *bt * (1.0 - 1e-12)
                    } else {
                        det > *bd * (1.0 + 1e-12)
                    }
                }
            };
            if better {
                best = Some((idx.to_vec(), trace, det));
            }
        });
        best.expect("at least one combination").0
    } else {
        // Greedy forward selection.
        let mut chosen: Vec<usize> = Vec::with_capacity(n);
        while chosen.len() < n {
            let mut best: Option<(usize, f64, f64)> = None;
            for i in 0..candidates.len() {
                if chosen.contains(&i) {
                    continue;
                }
                let mut trial = chosen.clone();
                trial.push(i);
                let fim = subset_fim(&trial);
                let (t, d) = (crlb_trace(&fim), fim.determinant());
                let better = match best {
                    None => true,
                    Some((_, bt, bd)) => t < bt || (!t.is_finite() && !bt.is_finite() && d > bd),
                };
                if better {
                    best = Some((i, t, d));
                }
            }
            chosen.push(best.expect("candidates remain").0);
        }
        chosen.sort_unstable();
        chosen
    };

    let fim = subset_fim(&chosen);
    let trace = crlb_trace(&fim);
    Ok(Selection {
        ids: chosen.iter().map(|&i| candidates[i]).collect(),
        crlb_trace: trace,
        degenerate: !trace.is_finite(),
    })
}

/// Calls `f` with every `k`-subset of `0..n` in lexicographic order.
fn for_each_combination(n: usize, k: usize, mut f: impl FnMut(&[usize])) {
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        f(&idx);
        let mut i = k;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            if idx[i] != i + n - k {
                break;
            }
            if i == 0 {
                return;
            }
        }
        idx[i] += 1;
        for j in (i + 1)..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}
