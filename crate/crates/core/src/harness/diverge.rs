//! The plateau-with-hidden-spike experiment: a likelihood-scaled EI run that
//! never samples the spike stays at regret ≥ 1, while the robust scale keeps
//! exploring and finds it.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain::{Domain, Point};
use crate::error::Result;
use crate::funcspace::{CounterexamplePair, Objective, ObjectiveConfig};
use crate::harness::trial::run_trial;
use crate::kernel::{KernelSpec, MaternNu};
use crate::lowdisc::ScrambledSobol;
use crate::strategy::{CnRule, StrategyConfig, ThetaBounds, Variant};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DivergenceOptions {
    pub domain: Domain,
    /// Kernel family (the length-scales are estimated).
    pub kernel: KernelSpec,
    pub theta_bounds: ThetaBounds,
    pub mle_grid: usize,
    pub budget: usize,
    pub k_init: usize,
    /// Scale rule for the likelihood-based variant.
    pub c_n: CnRule,
    pub v0_fraction: f64,
    pub w_radius: f64,
    /// `None` centers the spike; otherwise its position is drawn from this seed.
    pub spike_seed: Option<u64>,
    /// Trial seeds are `seed, seed + 1, …`.
    pub seed: u64,
}

impl Default for DivergenceOptions {
    fn default() -> Self {
        DivergenceOptions {
            domain: Domain::unit(1),
            kernel: KernelSpec::matern(MaternNu::FiveHalves, vec![0.1]).expect("valid kernel"),
            theta_bounds: ThetaBounds {
                lower: vec![0.02],
                upper: vec![1.0],
            },
            mle_grid: 20,
            budget: 256,
            k_init: 5,
            c_n: CnRule::InverseN,
            v0_fraction: CounterexamplePair::DEFAULT_V0_FRACTION,
            w_radius: CounterexamplePair::DEFAULT_W_RADIUS,
            spike_seed: None,
            seed: 0,
        }
    }
}

/// Outcome of one variant over all seeds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VariantOutcome {
    pub variant: Variant,
    pub stuck_fraction: f64,
    pub stuck: Vec<bool>,
    /// Step at which a design point first entered the spike ball, per seed.
    pub first_spike_hit: Vec<Option<usize>>,
    pub final_regret: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DivergenceReport {
    pub n_steps: usize,
    pub seeds: Vec<u64>,
    /// Regret threshold defining a stuck run.
    pub delta: f64,
    pub min_g: f64,
    pub mle: VariantOutcome,
    pub robust: VariantOutcome,
}

impl DivergenceReport {
    pub fn separation(&self) -> f64 {
        self.mle.stuck_fraction - self.robust.stuck_fraction
    }
}

/// Initial design outside the inner plateau: the first `k` points of a
/// scrambled Sobol stream that avoid `V₁`.
fn outer_initial_design(pair: &CounterexamplePair, k: usize, seed: u64) -> Vec<Point> {
    let domain = pair.domain();
    let seq = ScrambledSobol::new(domain.dim(), (seed ^ 0x5eed_0000_d1ce) as u32);
    (0..)
        .map(|i| seq.point_in(domain, i))
        .filter(|p| !pair.in_inner(p))
        .take(k)
        .collect()
}

pub fn divergence_experiment(n_steps: usize, n_seeds: usize, opts: &DivergenceOptions) -> Result<DivergenceReport> {
    let objective = Objective::build(
        ObjectiveConfig::Spiked {
            v0_fraction: opts.v0_fraction,
            w_radius: opts.w_radius,
            seed: opts.spike_seed,
        },
        &opts.domain,
    )?;
    let pair = objective
        .counterexample()
        .cloned()
        .ok_or_else(|| crate::Error::Internal("spiked objective lacks geometry".into()))?;
    let seeds: Vec<u64> = (0..n_seeds as u64).map(|i| opts.seed + i).collect();
    let run = |variant: Variant| -> Result<VariantOutcome> {
        let results: Vec<(bool, Option<usize>, f64)> = seeds
            .par_iter()
            .map(|&seed| {
                let config = StrategyConfig::new(variant, opts.kernel.clone())
                    .with_theta_bounds(opts.theta_bounds.lower.clone(), opts.theta_bounds.upper.clone())
                    .with_mle_grid(opts.mle_grid)
                    .with_budget(opts.budget)
                    .with_c_n(opts.c_n)
                    .with_initial_design(outer_initial_design(&pair, opts.k_init, seed));
                let rec = run_trial(&config, &objective, n_steps, seed)?;
                let hit = rec.steps.iter().find(|s| pair.in_spike(&s.x)).map(|s| s.n);
                let final_regret = rec.steps.last().map_or(f64::NAN, |s| s.regret);
                let stuck = hit.is_none() && final_regret >= CounterexamplePair::DELTA;
                Ok((stuck, hit, final_regret))
            })
            .collect::<Result<_>>()?;
        let stuck: Vec<bool> = results.iter().map(|r| r.0).collect();
        Ok(VariantOutcome {
            variant,
            stuck_fraction: stuck.iter().filter(|s| **s).count() as f64 / stuck.len().max(1) as f64,
            stuck,
            first_spike_hit: results.iter().map(|r| r.1).collect(),
            final_regret: results.iter().map(|r| r.2).collect(),
        })
    };
    Ok(DivergenceReport {
        n_steps,
        delta: CounterexamplePair::DELTA,
        min_g: pair.spiked_min(),
        mle: run(Variant::EiMle)?,
        robust: run(Variant::EiRobust)?,
        seeds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn initial_design_avoids_inner_region() {
        let pair = CounterexamplePair::standard(&Domain::unit(1)).unwrap();
        let pts = outer_initial_design(&pair, 5, 3);
        assert_eq!(pts.len(), 5);
        assert!(pts.iter().all(|p| !pair.in_inner(p)));
    }

    #[test]
    fn short_run_reports_consistently() {
        let opts = DivergenceOptions {
            mle_grid: 5,
            budget: 64,
            ..DivergenceOptions::default()
        };
        let rep = divergence_experiment(12, 3, &opts).unwrap();
        assert_eq!(rep.delta, 1.0);
        assert_eq!(rep.min_g, -1.0);
        for o in [&rep.mle, &rep.robust] {
            assert_eq!(o.stuck.len(), 3);
            for ((s, hit), r) in o.stuck.iter().zip(&o.first_spike_hit).zip(&o.final_regret) {
                assert_eq!(*s, hit.is_none() && *r >= 1.0);
            }
        }
    }
}
