//! The per-run tracking loop and Monte Carlo driver.

use nalgebra::DVector;
use rayon::prelude::*;
use serde::Serialize;

use super::config::{Scenario, ScenarioConfig, WeightMode};
use super::consensus::fuse_posteriors;
use super::init::{initialize_track, InitParams, InitialBearings};
use super::metrics::{anees, anees_bounds, armse, divergence_pct, rmse};
use super::truth::{derive_seed, generate_measurements, generate_truth};
use crate::dynamics::{m_per_min_to_knots, MotionModel, SensorPos};
use crate::error::{Error, Result};
use crate::filtering::{FilterState, SigmaPointFilter};
use crate::fusion::{FusionMethod, FusionReport, OptimizerOptions};
use crate::gaussian::GaussianDensity;
use crate::network::{deploy, select_sensors, Deployment};

/// Everything recorded from one Monte Carlo run, indexed by step `0..=steps`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRecord {
    pub run: usize,
    pub seed: u64,
    pub fused_pos_err2: Vec<f64>,
    /// (m/min)²
    pub fused_vel_err2: Vec<f64>,
    pub fused_nees: Vec<f64>,
    /// `[tracker][step]`, from trackers that never receive the fused density.
    pub tracker_pos_err2: Vec<Vec<f64>>,
    pub tracker_vel_err2: Vec<Vec<f64>>,
    pub tracker_nees: Vec<Vec<f64>>,
    /// `[step][tracker]`
    pub weights: Vec<Vec<f64>>,
    /// Active sensor ids of the consensus trackers at each selection epoch.
    pub selections: Vec<Vec<Vec<usize>>>,
    /// Predict or update steps that failed and kept the previous estimate.
    pub filter_failures: usize,
    /// Steps where the configured fusion failed and equal-weight Chernoff
    /// fusion was used instead.
    pub fusion_fallbacks: usize,
    pub jitter_steps: usize,
    pub truth_left_region: bool,
}

impl RunRecord {
    pub fn final_fused_error(&self) -> f64 {
        self.fused_pos_err2.last().map_or(f64::NAN, |e| e.sqrt())
    }

    pub fn final_tracker_error(&self, tracker: usize) -> f64 {
        self.tracker_pos_err2[tracker].last().map_or(f64::NAN, |e| e.sqrt())
    }
}

#[derive(Debug, Clone)]
struct Node {
    state: FilterState,
    active: Vec<usize>,
}

#[derive(Debug, Default)]
struct Errors {
    pos2: Vec<f64>,
    vel2: Vec<f64>,
    nees: Vec<f64>,
}

impl Errors {
    fn push(&mut self, d: &GaussianDensity, truth: &DVector<f64>) {
        let e = d.mean() - truth;
        self.pos2.push(e[0] * e[0] + e[1] * e[1]);
        self.vel2.push(e[2] * e[2] + e[3] * e[3]);
        self.nees.push(d.mahalanobis_sq(truth));
    }
}

/// A configured scenario with its sensor field, ready to run.
#[derive(Debug, Clone)]
pub struct Simulation {
    pub config: ScenarioConfig,
    pub deployment: Deployment,
    model: MotionModel,
    filter: SigmaPointFilter,
    options: OptimizerOptions,
    r: f64,
}

impl Simulation {
    pub fn new(config: ScenarioConfig) -> Result<Self> {
        config.validate()?;
        let deployment = deploy(
            config.surveillance_region()?,
            config.n_sensors,
            config.deployment_seed(),
        )?;
        Self::with_deployment(config, deployment)
    }

    /// Uses a fixed sensor field, for replaying a recorded deployment.
    pub fn with_deployment(config: ScenarioConfig, deployment: Deployment) -> Result<Self> {
        config.validate()?;
        if deployment.trackers.len() != config.tracker_count() {
            return Err(Error::Deployment(format!(
                "deployment has {} trackers, config expects {}",
                deployment.trackers.len(),
                config.tracker_count()
            )));
        }
        if let Some(t) = deployment
            .trackers
            .iter()
            .find(|t| t.sensor_ids.len() < config.n_selected)
        {
            return Err(Error::Deployment(format!(
                "tracker {} owns {} sensors, fewer than n = {}",
                t.id,
                t.sensor_ids.len(),
                config.n_selected
            )));
        }
        Ok(Self {
            model: config.motion_model()?,
            filter: SigmaPointFilter::new(config.sigma_scheme()),
            options: config.optimizer_options(),
            r: config.measurement_variance(),
            deployment,
            config,
        })
    }

    pub fn tracker_count(&self) -> usize {
        self.deployment.trackers.len()
    }

    /// Runs every Monte Carlo replication. Runs execute in parallel and are
    /// returned in run order.
    pub fn monte_carlo(&self) -> Result<MonteCarloResult> {
        let runs = (0..self.config.mc_runs)
            .into_par_iter()
            .map(|i| self.run(i))
            .collect::<Result<Vec<_>>>()?;
        Ok(MonteCarloResult {
            config: self.config.clone(),
            deployment: self.deployment.clone(),
            runs,
        })
    }

    /// One replication, seeded by `(config.seed, index)`.
    pub fn run(&self, index: usize) -> Result<RunRecord> {
        let cfg = &self.config;
        let seed = derive_seed(cfg.seed, index as u64);
        let truth = generate_truth(cfg, derive_seed(seed, 0))?;
        let all_positions: Vec<SensorPos> = self.deployment.sensors.iter().map(|s| s.pos).collect();
        let z = generate_measurements(&truth.states, &all_positions, self.r, derive_seed(seed, 1))?;

        let cue = truth.position(0);
        let initial: Vec<Node> = (0..self.tracker_count())
            .map(|j| self.initialize(j, cue, &z).map_err(|e| e.at_tracker(j)))
            .collect::<Result<_>>()?;

        // Without feedback the consensus trackers are themselves the
        // standalone trackers, so a second bank is unnecessary.
        let mut network = initial.clone();
        let mut solo = if cfg.feedback { Some(initial) } else { None };

        let n_trackers = self.tracker_count();
        let mut fused_err = Errors::default();
        let mut solo_err: Vec<Errors> = (0..n_trackers).map(|_| Errors::default()).collect();
        let mut weights = Vec::with_capacity(cfg.steps + 1);
        let mut selections = vec![network.iter().map(|n| n.active.clone()).collect::<Vec<_>>()];
        let mut filter_failures = 0;
        let mut fusion_fallbacks = 0;
        let mut jitter_steps = 0;
        let interval = cfg.selection_interval_steps();

        for k in 0..=cfg.steps {
            if k > 0 {
                let reselect = k % interval == 0;
                for bank in std::iter::once(&mut network).chain(solo.as_mut()) {
                    for (j, node) in bank.iter_mut().enumerate() {
                        if reselect {
                            if let Ok(sel) = self.select(j, node.state.position()) {
                                node.active = sel;
                            }
                        }
                        filter_failures += self.advance(node, &z[k]);
                    }
                }
                if reselect {
                    selections.push(network.iter().map(|n| n.active.clone()).collect());
                }
            }

            let report = self.fuse(&network).or_else(|e| {
                fusion_fallbacks += 1;
                self.fallback(&network).map_err(|_| e)
            })?;
            jitter_steps += usize::from(report.jitter_applied);
            if cfg.feedback {
                for node in network.iter_mut() {
                    node.state.density = report.fused.clone();
                }
            }
            fused_err.push(&report.fused, &truth.states[k]);
            weights.push(report.weights.as_slice().to_vec());
            let standalone = solo.as_ref().unwrap_or(&network);
            for (node, errs) in standalone.iter().zip(solo_err.iter_mut()) {
                errs.push(&node.state.density, &truth.states[k]);
            }
        }

        let (tracker_pos_err2, (tracker_vel_err2, tracker_nees)) =
            solo_err.into_iter().map(|e| (e.pos2, (e.vel2, e.nees))).unzip();
        Ok(RunRecord {
            run: index,
            seed,
            fused_pos_err2: fused_err.pos2,
            fused_vel_err2: fused_err.vel2,
            fused_nees: fused_err.nees,
            tracker_pos_err2,
            tracker_vel_err2,
            tracker_nees,
            weights,
            selections,
            filter_failures,
            fusion_fallbacks,
            jitter_steps,
            truth_left_region: truth.left_region,
        })
    }

    fn select(&self, tracker: usize, prior: (f64, f64)) -> Result<Vec<usize>> {
        let node = &self.deployment.trackers[tracker];
        Ok(select_sensors(node, &self.deployment, prior, self.config.n_selected, self.r)?.ids)
    }

    fn initialize(&self, tracker: usize, cue: (f64, f64), z: &[Vec<f64>]) -> Result<Node> {
        let active = self.select(tracker, cue)?;
        // Triangulate with the active pair whose bearing lines cross most
        // steeply at step 0.
        let mut best: Option<(usize, usize, f64)> = None;
        for (a, &i) in active.iter().enumerate() {
            for &j in &active[a + 1..] {
                let s = (z[0][j] - z[0][i]).sin().abs();
                if best.is_none_or(|(_, _, bs)| s > bs) {
                    best = Some((i, j, s));
                }
            }
        }
        let (i, j, _) = best.ok_or(Error::Empty("sensor pair"))?;
        let sensors = &self.deployment.sensors;
        let bearings = InitialBearings {
            first: (z[0][i], z[0][j]),
            second: (z[1.min(z.len() - 1)][i], z[1.min(z.len() - 1)][j]),
        };
        let turn_sd = match self.config.scenario {
            Scenario::Cv => None,
            Scenario::Ct => Some(self.config.turn_rate_std_deg_per_min.to_radians()),
        };
        let params = InitParams {
            r: self.r,
            v_max: self.config.v_max_m_per_min(),
            t: self.config.sampling_interval_min,
            turn_rate_std: turn_sd,
            velocity: self.config.velocity_init,
        };
        let density = initialize_track(&bearings, &sensors[i].pos, &sensors[j].pos, &params)?;
        Ok(Node {
            state: FilterState::new(density, 0),
            active,
        })
    }

    /// Predict and update one tracker; returns the number of failed stages.
    fn advance(&self, node: &mut Node, z: &[f64]) -> usize {
        let predicted = match self.filter.predict(&node.state, &self.model) {
            Ok(p) => p,
            Err(_) => {
                node.state.step += 1;
                return 1;
            }
        };
        let bearings: Vec<f64> = node.active.iter().map(|&i| z[i]).collect();
        let positions = self.deployment.sensor_positions(&node.active);
        match self.filter.update(&predicted, &bearings, &positions, self.r) {
            Ok(posterior) => {
                node.state = posterior;
                0
            }
            Err(_) => {
                node.state = predicted;
                1
            }
        }
    }

    fn fuse(&self, network: &[Node]) -> Result<FusionReport> {
        let posteriors: Vec<GaussianDensity> = network.iter().map(|n| n.state.density.clone()).collect();
        fuse_posteriors(
            &posteriors,
            self.config.fusion_method,
            self.config.weight_mode,
            &self.options,
        )
    }

    fn fallback(&self, network: &[Node]) -> Result<FusionReport> {
        let posteriors: Vec<GaussianDensity> = network.iter().map(|n| n.state.density.clone()).collect();
        fuse_posteriors(&posteriors, FusionMethod::Gmd, WeightMode::Equal, &self.options)
    }
}

/// All runs of one configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct MonteCarloResult {
    pub config: ScenarioConfig,
    pub deployment: Deployment,
    pub runs: Vec<RunRecord>,
}

/// Per-step error curves of one track.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrackCurves {
    pub rmse_pos_m: Vec<f64>,
    pub rmse_vel_knots: Vec<f64>,
    pub anees: Vec<f64>,
}

impl TrackCurves {
    fn from_errors(pos2: &[Vec<f64>], vel2: &[Vec<f64>], nees: &[Vec<f64>]) -> Result<Self> {
        Ok(Self {
            rmse_pos_m: rmse(pos2)?,
            rmse_vel_knots: rmse(vel2)?.into_iter().map(m_per_min_to_knots).collect(),
            anees: anees(nees)?,
        })
    }

    pub fn armse_pos_m(&self) -> f64 {
        armse(&self.rmse_pos_m).unwrap_or(f64::NAN)
    }

    pub fn armse_vel_knots(&self) -> f64 {
        armse(&self.rmse_vel_knots).unwrap_or(f64::NAN)
    }
}

/// Monte Carlo statistics for the fused track and each standalone tracker.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Aggregate {
    pub runs: usize,
    pub fused: TrackCurves,
    pub trackers: Vec<TrackCurves>,
    pub anees_bounds: (f64, f64),
    /// Run-averaged weights `[step][tracker]`.
    pub mean_weights: Vec<Vec<f64>>,
    pub fused_divergence_pct: f64,
    pub tracker_divergence_pct: Vec<f64>,
}

impl MonteCarloResult {
    pub fn aggregate(&self) -> Result<Aggregate> {
        self.aggregate_first(self.runs.len())
    }

    /// Statistics over the first `m` runs only.
    pub fn aggregate_first(&self, m: usize) -> Result<Aggregate> {
        let runs = &self.runs[..m.min(self.runs.len())];
        if runs.is_empty() {
            return Err(Error::Empty("Monte Carlo runs"));
        }
        let collect = |f: &dyn Fn(&RunRecord) -> &Vec<f64>| runs.iter().map(|r| f(r).clone()).collect::<Vec<_>>();
        let fused = TrackCurves::from_errors(
            &collect(&|r| &r.fused_pos_err2),
            &collect(&|r| &r.fused_vel_err2),
            &collect(&|r| &r.fused_nees),
        )?;
        let n_trackers = runs[0].tracker_pos_err2.len();
        let trackers = (0..n_trackers)
            .map(|j| {
                TrackCurves::from_errors(
                    &collect(&|r| &r.tracker_pos_err2[j]),
                    &collect(&|r| &r.tracker_vel_err2[j]),
                    &collect(&|r| &r.tracker_nees[j]),
                )
            })
            .collect::<Result<Vec<_>>>()?;

        let steps = runs[0].weights.len();
        let mean_weights = (0..steps)
            .map(|k| {
                (0..n_trackers)
                    .map(|j| runs.iter().map(|r| r.weights[k][j]).sum::<f64>() / runs.len() as f64)
                    .collect()
            })
            .collect();

        let bound = self.config.divergence_bound_m;
        let finals: Vec<f64> = runs.iter().map(RunRecord::final_fused_error).collect();
        let tracker_divergence_pct = (0..n_trackers)
            .map(|j| {
                divergence_pct(
                    &runs.iter().map(|r| r.final_tracker_error(j)).collect::<Vec<_>>(),
                    bound,
                )
            })
            .collect::<Result<Vec<_>>>()?;

        Ok(Aggregate {
            runs: runs.len(),
            fused,
            trackers,
            anees_bounds: anees_bounds(self.config.state_dim(), runs.len())?,
            mean_weights,
            fused_divergence_pct: divergence_pct(&finals, bound)?,
            tracker_divergence_pct,
        })
    }
}
