//! Trial driver and the experiments built on it.

pub mod adversary;
pub mod config;
pub mod diverge;
pub mod mesh;
pub mod rate;
pub mod stats;
pub mod trial;

pub use adversary::{adversarial_lower_bound, AdversaryReport};
pub use config::{ExperimentConfig, SeedSpec};
pub use diverge::{divergence_experiment, DivergenceOptions, DivergenceReport};
pub use mesh::{mesh_norm, random_mesh_experiment, MeshExperiment, MeshRow, MeshStats};
pub use rate::{fit_rate, fit_slope, rate_sweep, RateRow, REGRET_FLOOR};
pub use stats::{mann_kendall, median, quantile, MannKendall};
pub use trial::{run_trial, run_trials, RegretRecord, StepRecord};
