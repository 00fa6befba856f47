//! Deterministic multirotor flight simulation built around a cascade
//! controller with RISE feedback and filter-based online mass-inertia
//! estimation, plus an adaptive sliding-mode baseline for comparison studies.
//!
//! Modules:
//! - [`math`]: vectors, rotations, RK4
//! - [`model`]: rigid-body dynamics, regressors, domain types
//! - [`trajectory`]: closed-form reference trajectories
//! - [`rise`]: cascade controller with RISE feedback terms
//! - [`estimator`]: filtered-regression parameter estimation
//! - [`asmc`]: sliding-mode baseline with gradient adaptation
//! - [`disturbance`]: bounded Ornstein-Uhlenbeck disturbance process
//! - [`sim`]: fixed-step closed-loop engine
//! - [`metrics`], [`diagnostics`]: run analysis
//! - [`config`], [`trace`], [`experiment`], [`plot`]: experiment front end

pub mod asmc;
pub mod config;
pub mod diagnostics;
pub mod disturbance;
pub mod estimator;
pub mod experiment;
pub mod math;
pub mod metrics;
pub mod model;
pub mod plot;
pub mod rise;
pub mod sim;
pub mod trace;
pub mod trajectory;

pub use config::{benchmark_experiment, load_config, ExperimentSpec, ScenarioConfig};
pub use math::{Mat3, Vec3};
pub use model::{ControlWrench, Disturbance, MassInertia, VehicleState, GRAVITY};
pub use sim::{run_scenario, SimError, SimOutput};
pub use trace::SimTrace;
