//! Lower-bound adversary: a deterministic strategy that has looked at fewer
//! points than there are bump cells cannot tell `f ≡ 0` from a bump it never
//! touched.

use serde::{Deserialize, Serialize};

use crate::domain::{Domain, Point};
use crate::error::{Error, Result};
use crate::funcspace::BumpFamily;
use crate::strategy::{StrategyConfig, StrategyState};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdversaryReport {
    pub k: usize,
    pub d: usize,
    pub nu: f64,
    pub amplitude: f64,
    /// Observations made before the final recommendation.
    pub steps: usize,
    /// Index of the untouched family member used for the replay.
    pub member: usize,
    pub visited: Vec<Point>,
    pub recommendation: Point,
    /// Whether the replay on the member reproduced every point exactly.
    pub replay_identical: bool,
    /// `ψ_m(x*) − min ψ_m` on the replay.
    pub loss: f64,
    /// `C(2k)^{−ν}`.
    pub expected_loss: f64,
}

fn drive(
    config: &StrategyConfig,
    domain: &Domain,
    seed: u64,
    steps: usize,
    f: impl Fn(&[f64]) -> f64,
) -> Result<(Vec<Point>, Point)> {
    let mut state = StrategyState::new(config.clone(), domain.clone(), seed)?;
    let mut visited = Vec::with_capacity(steps);
    for n in 1..=steps {
        let x = state.next_design_point().map_err(|e| e.at_step(n))?;
        state.observe(&x, f(&x)).map_err(|e| e.at_step(n))?;
        visited.push(x);
    }
    let rec = state.recommend()?;
    Ok((visited, rec))
}

/// Run `config` on `f ≡ 0` over `[0, 1]^d` for `max(n − 1, 1)` steps, where
/// `2n = (2k)^d`, pick the lowest-index bump `ψ_m` that vanishes at every
/// visited point and at the recommendation, and replay on `ψ_m`.
pub fn adversarial_lower_bound(
    config: &StrategyConfig,
    k: usize,
    nu: f64,
    amplitude: f64,
    seed: u64,
) -> Result<AdversaryReport> {
    let d = config.kernel.dim();
    let family = BumpFamily::new(k, d, nu, amplitude)?;
    let domain = Domain::unit(d);
    let n = family.len() / 2;
    let steps = n.saturating_sub(1).max(1);

    let (visited, recommendation) = drive(config, &domain, seed, steps, |_| 0.0)?;
    let member = (0..family.len())
        .find(|&m| {
            visited
                .iter()
                .chain(std::iter::once(&recommendation))
                .all(|x| family.eval_member(m, x) == 0.0)
        })
        .ok_or_else(|| Error::Internal("every family member was touched".into()))?;

    let (replay, replay_rec) = drive(config, &domain, seed, steps, |x| family.eval_member(member, x))?;
    let replay_identical = replay == visited && replay_rec == recommendation;
    let loss = family.eval_member(member, &replay_rec) - family.member_min();
    Ok(AdversaryReport {
        k,
        d,
        nu,
        amplitude,
        steps,
        member,
        visited,
        recommendation,
        replay_identical,
        loss,
        expected_loss: family.depth(),
    })
}
