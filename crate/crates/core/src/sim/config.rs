use serde::{Deserialize, Serialize};

use crate::dynamics::{knots_to_m_per_min, CtParams, CvParams, MotionModel};
use crate::error::{Error, Result};
use crate::filtering::SigmaScheme;
use crate::fusion::{FusionMethod, OptimizerOptions};
use crate::network::SurveillanceRegion;

use super::init::VelocityInit;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scenario {
    /// Nearly constant velocity target, 4-state trackers.
    Cv,
    /// Coordinated-turn target, 5-state trackers.
    Ct,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightMode {
    Equal,
    Optimized,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FilterKind {
    Cubature,
    Unscented,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionConfig {
    pub width_km: f64,
    pub height_km: f64,
    pub sub_rows: usize,
    pub sub_cols: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetConfig {
    pub x_km: f64,
    pub y_km: f64,
    pub speed_knots: f64,
    /// Clockwise from north.
    pub course_deg: f64,
    /// Negative turns clockwise. Ignored by the constant-velocity scenario.
    #[serde(default)]
    pub turn_rate_deg_per_min: f64,
}

/// Every parameter of one simulated scenario. Field names follow the
/// tracking-parameter table; short symbols are accepted as aliases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario: Scenario,
    /// Sampling interval `T`, minutes.
    #[serde(alias = "T")]
    pub sampling_interval_min: f64,
    pub steps: usize,
    /// m²/min³
    pub q1: f64,
    /// rad²/min³
    pub q2: f64,
    /// Bearing noise standard deviation; `R` is its square in rad².
    #[serde(alias = "R_deg")]
    pub measurement_noise_deg: f64,
    #[serde(alias = "n_s")]
    pub n_sensors: usize,
    #[serde(alias = "n")]
    pub n_selected: usize,
    pub selection_interval_min: f64,
    pub region: RegionConfig,
    pub target: TargetConfig,
    /// Velocity prior bound `v_m`; each component's variance is `v_m²/3`.
    pub v_max_knots: f64,
    pub velocity_init: VelocityInit,
    /// Prior standard deviation of the initial turn-rate estimate.
    pub turn_rate_std_deg_per_min: f64,
    /// Let the true turn rate random-walk with intensity `q2`.
    pub truth_turn_noise: bool,
    pub mc_runs: usize,
    pub seed: u64,
    /// Seed of the sensor field; defaults to `seed`.
    pub deployment_seed: Option<u64>,
    pub fusion_method: FusionMethod,
    pub weight_mode: WeightMode,
    /// Replace every tracker's posterior by the consensus density.
    pub feedback: bool,
    pub divergence_bound_m: f64,
    pub filter: FilterKind,
    pub unscented_kappa: f64,
    pub grid_step: f64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self::scenario1()
    }
}

impl ScenarioConfig {
    /// Straight-line target.
    pub fn scenario1() -> Self {
        Self {
            scenario: Scenario::Cv,
            sampling_interval_min: 0.25,
            steps: 144,
            q1: 1.944,
            q2: 0.01,
            measurement_noise_deg: 2.0,
            n_sensors: 100,
            n_selected: 2,
            selection_interval_min: 2.0,
            region: RegionConfig {
                width_km: 10.0,
                height_km: 10.0,
                sub_rows: 2,
                sub_cols: 2,
            },
            target: TargetConfig {
                x_km: 9.0,
                y_km: 9.0,
                speed_knots: 10.0,
                course_deg: -130.0,
                turn_rate_deg_per_min: 0.0,
            },
            v_max_knots: 15.0,
            velocity_init: VelocityInit::Combined,
            turn_rate_std_deg_per_min: 2.0,
            truth_turn_noise: false,
            mc_runs: 100,
            seed: 2024,
            deployment_seed: None,
            fusion_method: FusionMethod::Hmd,
            weight_mode: WeightMode::Optimized,
            feedback: true,
            divergence_bound_m: 1000.0,
            filter: FilterKind::Cubature,
            unscented_kappa: 1.0,
            grid_step: 0.05,
        }
    }

    /// Coordinated-turn target.
    pub fn scenario2() -> Self {
        Self {
            scenario: Scenario::Ct,
            target: TargetConfig {
                x_km: 8.5,
                y_km: 8.0,
                speed_knots: 10.0,
                course_deg: -165.0,
                turn_rate_deg_per_min: -1.84,
            },
            ..Self::scenario1()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if !(self.sampling_interval_min > 0.0) {
            return bad(format!(
                "sampling interval {} must be positive",
                self.sampling_interval_min
            ));
        }
        if self.steps < 1 {
            return bad("steps must be at least 1".into());
        }
        if !(self.q1 >= 0.0 && self.q2 >= 0.0) {
            return bad("process noise intensities must be non-negative".into());
        }
        if !(self.measurement_noise_deg > 0.0) {
            return bad("measurement noise must be positive".into());
        }
        if self.n_selected < 2 {
            return bad("at least two sensors must be activated per tracker".into());
        }
        if self.n_sensors < self.n_selected * self.region.sub_rows * self.region.sub_cols {
            return bad(format!(
                "{} sensors cannot supply {} per tracker",
                self.n_sensors, self.n_selected
            ));
        }
        if !(self.selection_interval_min > 0.0) {
            return bad("selection interval must be positive".into());
        }
        if self.mc_runs < 1 {
            return bad("mc_runs must be at least 1".into());
        }
        if !(self.divergence_bound_m > 0.0) {
            return bad("divergence bound must be positive".into());
        }
        if !(self.v_max_knots > 0.0 && self.turn_rate_std_deg_per_min > 0.0) {
            return bad("initial velocity and turn-rate spreads must be positive".into());
        }
        if !(self.grid_step > 0.0 && self.grid_step <= 1.0) {
            return bad(format!("grid step {} not in (0, 1]", self.grid_step));
        }
        if self.filter == FilterKind::Unscented && !(self.state_dim() as f64 + self.unscented_kappa > 0.0) {
            return bad(format!("unscented kappa {} too small", self.unscented_kappa));
        }
        self.surveillance_region()?;
        let t = &self.target;
        if !self.surveillance_region()?.contains(t.x_km * 1000.0, t.y_km * 1000.0) {
            return bad("initial target position lies outside the region".into());
        }
        Ok(())
    }

    pub fn surveillance_region(&self) -> Result<SurveillanceRegion> {
        SurveillanceRegion::new(
            self.region.width_km * 1000.0,
            self.region.height_km * 1000.0,
            self.region.sub_rows,
            self.region.sub_cols,
        )
    }

    pub fn state_dim(&self) -> usize {
        match self.scenario {
            Scenario::Cv => 4,
            Scenario::Ct => 5,
        }
    }

    pub fn tracker_count(&self) -> usize {
        self.region.sub_rows * self.region.sub_cols
    }

    /// Bearing noise variance, rad².
    pub fn measurement_variance(&self) -> f64 {
        self.measurement_noise_deg.to_radians().powi(2)
    }

    /// Re-selection period in whole steps (at least one).
    pub fn selection_interval_steps(&self) -> usize {
        ((self.selection_interval_min / self.sampling_interval_min).round() as usize).max(1)
    }

    pub fn duration_min(&self) -> f64 {
        self.steps as f64 * self.sampling_interval_min
    }

    pub fn motion_model(&self) -> Result<MotionModel> {
        Ok(match self.scenario {
            Scenario::Cv => MotionModel::Cv(CvParams::new(self.sampling_interval_min, self.q1)?),
            Scenario::Ct => MotionModel::Ct(CtParams::new(self.sampling_interval_min, self.q1, self.q2)?),
        })
    }

    pub fn sigma_scheme(&self) -> SigmaScheme {
        match self.filter {
            FilterKind::Cubature => SigmaScheme::Cubature3,
            FilterKind::Unscented => SigmaScheme::Unscented {
                kappa: self.unscented_kappa,
            },
        }
    }

    pub fn optimizer_options(&self) -> OptimizerOptions {
        OptimizerOptions {
            grid_step: self.grid_step,
            ..OptimizerOptions::default()
        }
    }

    pub fn v_max_m_per_min(&self) -> f64 {
        knots_to_m_per_min(self.v_max_knots)
    }

    pub fn deployment_seed(&self) -> u64 {
        self.deployment_seed.unwrap_or(self.seed)
    }
}
