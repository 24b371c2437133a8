//! Scenario simulation: truth, measurements, initialization, the consensus
//! loop and Monte Carlo metrics.

pub mod config;
pub mod consensus;
pub mod init;
pub mod metrics;
pub mod report;
pub mod run;
pub mod truth;

pub use config::{FilterKind, RegionConfig, Scenario, ScenarioConfig, TargetConfig, WeightMode};
pub use consensus::{consensus_step, fuse_posteriors};
pub use init::{
    initialize_track, triangulate, triangulation_jacobian, InitParams, InitialBearings, VelocityInit,
    PARALLEL_TOLERANCE,
};
pub use metrics::{anees, anees_bounds, armse, divergence_pct, rmse};
pub use report::{write_metrics_csv, write_trackers_csv, Summary};
pub use run::{Aggregate, MonteCarloResult, RunRecord, Simulation, TrackCurves};
pub use truth::{derive_seed, generate_measurements, generate_truth, initial_state, Truth};
