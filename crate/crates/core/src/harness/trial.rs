//! Running one strategy against one objective.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain::Point;
use crate::error::{Error, Result};
use crate::funcspace::{Objective, ObjectiveConfig};
use crate::strategy::{StrategyConfig, StrategyState};

/// One row of a trial: the step's design point and the recommendation after
/// observing it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    /// Number of observations, starting at 1.
    pub n: usize,
    pub x: Point,
    pub z: f64,
    /// `z*_n`.
    pub best_z: f64,
    pub recommendation: Point,
    /// `f(x*_n)`.
    pub rec_value: f64,
    /// `f(x*_n) − min f`.
    pub regret: f64,
    pub sigma_hat: Option<f64>,
    pub theta_hat: Option<Vec<f64>>,
}

/// Everything needed to replay and analyse a trial.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegretRecord {
    pub strategy: StrategyConfig,
    pub objective: ObjectiveConfig,
    pub seed: u64,
    /// `min f` used for regret.
    pub min_value: f64,
    /// Whether `min_value` is exact rather than a grid estimate.
    pub min_exact: bool,
    pub steps: Vec<StepRecord>,
}

impl RegretRecord {
    pub fn regrets(&self) -> Vec<f64> {
        self.steps.iter().map(|s| s.regret).collect()
    }

    pub fn points(&self) -> Vec<Point> {
        self.steps.iter().map(|s| s.x.clone()).collect()
    }

    /// Regret after `n` observations (1-based).
    pub fn regret_at(&self, n: usize) -> Option<f64> {
        self.steps.get(n.checked_sub(1)?).map(|s| s.regret)
    }
}

/// Drive `n_steps` rounds of propose / observe / recommend.
///
/// When `min f` is only grid-estimated, it is lowered to any smaller value
/// seen during the run, so regret is never negative.
pub fn run_trial(
    config: &StrategyConfig,
    objective: &Objective,
    n_steps: usize,
    seed: u64,
) -> Result<RegretRecord> {
    let domain = objective.domain().clone();
    let k_init = config.initial_size(&domain);
    if n_steps < k_init {
        return Err(Error::InvalidConfig(format!(
            "{n_steps} steps is fewer than the initial design of {k_init}"
        )));
    }
    let mut state = StrategyState::new(config.clone(), domain, seed)?;
    let mut steps = Vec::with_capacity(n_steps);
    for n in 1..=n_steps {
        let x = state.next_design_point().map_err(|e| e.at_step(n))?;
        let z = objective.eval(&x);
        state.observe(&x, z).map_err(|e| e.at_step(n))?;
        let recommendation = state.recommend().map_err(|e| e.at_step(n))?;
        let rec_value = objective.eval(&recommendation);
        let best_z = state.design().map_or(z, |d| d.best_value());
        steps.push(StepRecord {
            n,
            x,
            z,
            best_z,
            recommendation,
            rec_value,
            regret: 0.0,
            sigma_hat: state.sigma_hat(),
            theta_hat: state.theta_hat().map(<[f64]>::to_vec),
        });
    }
    let min_exact = objective.minimum_is_exact();
    let mut min_value = objective.minimum();
    if !min_exact {
        for s in &steps {
            min_value = min_value.min(s.z).min(s.rec_value);
        }
    }
    for s in &mut steps {
        s.regret = s.rec_value - min_value;
    }
    Ok(RegretRecord {
        strategy: config.clone(),
        objective: objective.config().clone(),
        seed,
        min_value,
        min_exact,
        steps,
    })
}

/// Independent trials over `seeds`, in parallel; output order follows
/// `seeds`.
pub fn run_trials(
    config: &StrategyConfig,
    objective: &Objective,
    n_steps: usize,
    seeds: &[u64],
) -> Result<Vec<RegretRecord>> {
    seeds
        .par_iter()
        .map(|&seed| run_trial(config, objective, n_steps, seed))
        .collect()
}
