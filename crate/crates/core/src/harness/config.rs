//! Declarative experiment description, read from a single TOML file.
//!
//! ```toml
//! steps = 200
//! seeds = 20                  # or an explicit list: seeds = [1, 5, 9]
//!
//! [domain]
//! lower = [0.0]
//! upper = [1.0]
//!
//! [strategy]
//! variant = "ei_fixed"        # naive | ei_fixed | ei_mle | ei_robust
//! kernel = { family = "matern", nu = "1/2", theta = [0.1] }
//! sigma = 1.0
//!
//! [objective]
//! kind = "random_span"
//! centers = 8
//! seed = 1
//! kernel = { family = "matern", nu = "1/2", theta = [0.1] }
//! ```
//!
//! Sweeps list several `[[strategies]]` and `[[objectives]]` tables instead
//! of (or in addition to) the single ones. The optional `[rates]`,
//! `[diverge]`, `[adversary]` and `[mesh]` tables configure the
//! corresponding experiments.

use serde::{Deserialize, Serialize};

use crate::domain::Domain;
use crate::error::{Error, Result};
use crate::funcspace::{Objective, ObjectiveConfig};
use crate::harness::diverge::DivergenceOptions;
use crate::strategy::StrategyConfig;

/// Either a seed count (seeds `0..count`) or an explicit list.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SeedSpec {
    Count(u64),
    List(Vec<u64>),
}

impl Default for SeedSpec {
    fn default() -> Self {
        SeedSpec::Count(1)
    }
}

impl SeedSpec {
    pub fn seeds(&self) -> Vec<u64> {
        match self {
            SeedSpec::Count(n) => (0..*n).collect(),
            SeedSpec::List(v) => v.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RatesSection {
    /// Inclusive step window for the slope fit.
    pub window: (usize, usize),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdversarySection {
    pub k: Vec<usize>,
    pub nu: f64,
    #[serde(default = "default_amplitude")]
    pub amplitude: f64,
}

fn default_amplitude() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshSection {
    pub n: Vec<usize>,
    #[serde(default = "default_mesh_dims")]
    pub d: Vec<usize>,
    /// Grid nodes per axis for `d ≥ 2`.
    #[serde(default = "default_resolution")]
    pub resolution: usize,
}

fn default_mesh_dims() -> Vec<usize> {
    vec![1, 2]
}

fn default_resolution() -> usize {
    400
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_domain")]
    pub domain: Domain,
    #[serde(default)]
    pub steps: usize,
    #[serde(default)]
    pub seeds: SeedSpec,
    #[serde(default)]
    pub strategy: Option<StrategyConfig>,
    #[serde(default)]
    pub strategies: Vec<StrategyConfig>,
    #[serde(default)]
    pub objective: Option<ObjectiveConfig>,
    #[serde(default)]
    pub objectives: Vec<ObjectiveConfig>,
    #[serde(default)]
    pub rates: Option<RatesSection>,
    #[serde(default)]
    pub diverge: Option<DivergenceOptions>,
    #[serde(default)]
    pub adversary: Option<AdversarySection>,
    #[serde(default)]
    pub mesh: Option<MeshSection>,
}

fn default_domain() -> Domain {
    Domain::unit(1)
}

impl ExperimentConfig {
    /// The single strategy followed by the `strategies` list.
    pub fn all_strategies(&self) -> Vec<StrategyConfig> {
        self.strategy.iter().chain(&self.strategies).cloned().collect()
    }

    pub fn all_objectives(&self) -> Vec<ObjectiveConfig> {
        self.objective.iter().chain(&self.objectives).cloned().collect()
    }

    pub fn build_objectives(&self) -> Result<Vec<Objective>> {
        self.all_objectives()
            .into_iter()
            .map(|o| Objective::build(o, &self.domain))
            .collect()
    }

    /// Replace the configured seeds by a single one.
    pub fn override_seed(&mut self, seed: u64) {
        self.seeds = SeedSpec::List(vec![seed]);
    }

    /// Checks shared by the trial-based commands.
    pub fn validate_trials(&self) -> Result<()> {
        let strategies = self.all_strategies();
        if strategies.is_empty() {
            return Err(Error::InvalidConfig("no strategy configured".into()));
        }
        if self.all_objectives().is_empty() {
            return Err(Error::InvalidConfig("no objective configured".into()));
        }
        if self.seeds.seeds().is_empty() {
            return Err(Error::InvalidConfig("no seeds configured".into()));
        }
        for s in &strategies {
            s.validate(&self.domain)?;
            let k = s.initial_size(&self.domain);
            if self.steps < k {
                return Err(Error::InvalidConfig(format!(
                    "steps = {} is fewer than the initial design of {k}",
                    self.steps
                )));
            }
        }
        Ok(())
    }
}
