//! Empirical convergence rates from regret curves.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::funcspace::Objective;
use crate::harness::trial::{run_trial, RegretRecord};
use crate::strategy::{StrategyConfig, Variant};

/// Regret values below this are treated as this value on a log scale.
pub const REGRET_FLOOR: f64 = 1e-6;

/// Least-squares slope of `ln y` against `ln n`.
pub fn fit_slope(ns: &[f64], ys: &[f64]) -> Result<f64> {
    if ns.len() != ys.len() || ns.len() < 2 {
        return Err(Error::InvalidConfig("slope fit needs at least two points".into()));
    }
    if ns.iter().chain(ys).any(|v| !(*v > 0.0)) {
        return Err(Error::InvalidConfig("slope fit needs positive data".into()));
    }
    let lx: Vec<f64> = ns.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let m = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / m;
    let my = ly.iter().sum::<f64>() / m;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidConfig("slope fit needs distinct n".into()));
    }
    Ok(sxy / sxx)
}

/// Slope of `log(regret)` against `log(n)` for `n_lo ≤ n ≤ n_hi`, with
/// regret floored at [`REGRET_FLOOR`].
pub fn fit_rate(record: &RegretRecord, window: (usize, usize)) -> Result<f64> {
    let (lo, hi) = window;
    let (ns, ys): (Vec<f64>, Vec<f64>) = record
        .steps
        .iter()
        .filter(|s| s.n >= lo && s.n <= hi)
        .map(|s| (s.n as f64, s.regret.max(REGRET_FLOOR)))
        .unzip();
    fit_slope(&ns, &ys)
}

/// One trial's summary in a strategy × objective × seed sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateRow {
    pub strategy: usize,
    pub variant: Variant,
    pub objective: usize,
    pub seed: u64,
    pub slope: f64,
    pub final_regret: f64,
}

/// Run every (strategy, objective, seed) combination in parallel and fit
/// rates; rows are ordered by strategy, then objective, then seed.
pub fn rate_sweep(
    strategies: &[StrategyConfig],
    objectives: &[Objective],
    seeds: &[u64],
    n_steps: usize,
    window: (usize, usize),
) -> Result<Vec<RateRow>> {
    let jobs: Vec<(usize, usize, u64)> = (0..strategies.len())
        .flat_map(|s| (0..objectives.len()).flat_map(move |o| seeds.iter().map(move |&seed| (s, o, seed))))
        .collect();
    jobs.par_iter()
        .map(|&(s, o, seed)| {
            let rec = run_trial(&strategies[s], &objectives[o], n_steps, seed)?;
            Ok(RateRow {
                strategy: s,
                variant: strategies[s].variant,
                objective: o,
                seed,
                slope: fit_rate(&rec, window)?,
                final_regret: rec.steps.last().map_or(f64::NAN, |st| st.regret),
            })
        })
        .collect()
}
