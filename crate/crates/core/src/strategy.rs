//! Sequential design strategies.
//!
//! | variant    | next point                                                        |
//! |------------|-------------------------------------------------------------------|
//! | `Naive`    | the scrambled Sobol sequence, forever; recommends `argmin f̂_n`     |
//! | `EiFixed`  | EI maximizer under a fixed prior `(σ, θ)`                           |
//! | `EiMle`    | EI with grid-likelihood `θ̂_n` and `σ̂_n² = c_n R̂_n²(θ̂_n)`            |
//! | `EiRobust` | EI with grid-likelihood `θ̂_n` and `σ̂_n = R̂_n(θ̂_n)`                  |
//!
//! Any variant can be wrapped with `epsilon > 0`, which replaces the choice by
//! a uniform draw from the box with that probability.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::acquisition::{EiSearch, PriorParams, DEFAULT_BUDGET};
use crate::domain::{Domain, Point};
use crate::error::{Error, Result};
use crate::kernel::{KernelFamily, KernelSpec};
use crate::lowdisc::ScrambledSobol;
use crate::posterior::{DesignSet, Posterior};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Naive,
    EiFixed,
    EiMle,
    EiRobust,
}

impl Variant {
    pub const ALL: [Variant; 4] = [Variant::Naive, Variant::EiFixed, Variant::EiMle, Variant::EiRobust];

    pub fn estimates_theta(self) -> bool {
        matches!(self, Variant::EiMle | Variant::EiRobust)
    }

    pub fn name(self) -> &'static str {
        match self {
            Variant::Naive => "naive",
            Variant::EiFixed => "ei_fixed",
            Variant::EiMle => "ei_mle",
            Variant::EiRobust => "ei_robust",
        }
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown strategy variant {s:?}")))
    }
}

/// Decay of the likelihood-based scale, `σ̂_n² = c_n R̂_n²`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CnRule {
    /// `1 / (n · max(1, ln n))`
    #[default]
    NLogN,
    /// `1 / n`, the plain maximum-likelihood scale.
    InverseN,
}

impl CnRule {
    pub fn value(self, n: usize) -> f64 {
        let n = n.max(1) as f64;
        match self {
            CnRule::NLogN => 1.0 / (n * n.ln().max(1.0)),
            CnRule::InverseN => 1.0 / n,
        }
    }
}

/// Box `[lower, upper]` for the length-scale estimate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThetaBounds {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl ThetaBounds {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        let b = ThetaBounds { lower, upper };
        b.validate()?;
        Ok(b)
    }

    fn validate(&self) -> Result<()> {
        if self.lower.len() != self.upper.len() {
            return Err(Error::DimensionMismatch {
                expected: self.lower.len(),
                found: self.upper.len(),
            });
        }
        if self
            .lower
            .iter()
            .zip(&self.upper)
            .any(|(l, u)| !(l.is_finite() && u.is_finite() && *l > 0.0 && l <= u))
        {
            return Err(Error::InvalidConfig(
                "theta bounds must satisfy 0 < lower <= upper".into(),
            ));
        }
        Ok(())
    }

    /// `∏ upper_i / lower_i`.
    pub fn volume_ratio(&self) -> f64 {
        self.lower.iter().zip(&self.upper).map(|(l, u)| u / l).product()
    }

    /// `grid` log-spaced values per axis (endpoints exact), as a cartesian
    /// product ordered so that later entries are componentwise larger along
    /// the last axis first.
    pub fn grid(&self, grid: usize) -> Vec<Vec<f64>> {
        let axes: Vec<Vec<f64>> = self
            .lower
            .iter()
            .zip(&self.upper)
            .map(|(&l, &u)| {
                if grid <= 1 || l == u {
                    return vec![l];
                }
                let (ll, lu) = (l.ln(), u.ln());
                (0..grid)
                    .map(|i| match i {
                        0 => l,
                        _ if i == grid - 1 => u,
                        _ => (ll + (lu - ll) * i as f64 / (grid - 1) as f64).exp(),
                    })
                    .collect()
            })
            .collect();
        let mut out: Vec<Vec<f64>> = vec![Vec::new()];
        for axis in &axes {
            out = out
                .into_iter()
                .flat_map(|prefix| {
                    axis.iter().map(move |v| {
                        let mut p = prefix.clone();
                        p.push(*v);
                        p
                    })
                })
                .collect();
        }
        out
    }
}

/// Declarative strategy settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StrategyConfig {
    pub variant: Variant,
    /// Kernel family and, for `Naive` and `EiFixed`, the length-scales used.
    pub kernel: KernelSpec,
    #[serde(default)]
    pub epsilon: f64,
    /// Initial design size; defaults to `5·d`.
    #[serde(default)]
    pub k_init: Option<usize>,
    /// Prior scale for `EiFixed`.
    #[serde(default = "default_sigma")]
    pub sigma: f64,
    #[serde(default)]
    pub c_n: CnRule,
    /// Defaults to `[0.01, 2]` times the box width on each axis.
    #[serde(default)]
    pub theta_bounds: Option<ThetaBounds>,
    #[serde(default = "default_mle_grid")]
    pub mle_grid: usize,
    /// Candidates per EI search.
    #[serde(default = "default_budget")]
    pub budget: usize,
    /// Explicit initial design, replacing the Sobol start.
    #[serde(default)]
    pub initial_design: Option<Vec<Point>>,
}

fn default_sigma() -> f64 {
    1.0
}

fn default_mle_grid() -> usize {
    20
}

fn default_budget() -> usize {
    DEFAULT_BUDGET
}

impl StrategyConfig {
    pub fn new(variant: Variant, kernel: KernelSpec) -> Self {
        StrategyConfig {
            variant,
            kernel,
            epsilon: 0.0,
            k_init: None,
            sigma: default_sigma(),
            c_n: CnRule::default(),
            theta_bounds: None,
            mle_grid: default_mle_grid(),
            budget: default_budget(),
            initial_design: None,
        }
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    pub fn with_k_init(mut self, k: usize) -> Self {
        self.k_init = Some(k);
        self
    }

    pub fn with_sigma(mut self, sigma: f64) -> Self {
        self.sigma = sigma;
        self
    }

    pub fn with_c_n(mut self, rule: CnRule) -> Self {
        self.c_n = rule;
        self
    }

    pub fn with_theta_bounds(mut self, lower: Vec<f64>, upper: Vec<f64>) -> Self {
        self.theta_bounds = Some(ThetaBounds { lower, upper });
        self
    }

    pub fn with_mle_grid(mut self, grid: usize) -> Self {
        self.mle_grid = grid;
        self
    }

    pub fn with_budget(mut self, budget: usize) -> Self {
        self.budget = budget;
        self
    }

    pub fn with_initial_design(mut self, points: Vec<Point>) -> Self {
        self.initial_design = Some(points);
        self
    }

    /// Effective initial design size on `domain`.
    pub fn initial_size(&self, domain: &Domain) -> usize {
        match (&self.initial_design, self.k_init) {
            (Some(p), _) => p.len(),
            (None, Some(k)) => k,
            (None, None) => 5 * domain.dim(),
        }
    }

    /// Effective θ bounds on `domain`.
    pub fn bounds(&self, domain: &Domain) -> ThetaBounds {
        self.theta_bounds.clone().unwrap_or_else(|| ThetaBounds {
            lower: (0..domain.dim()).map(|k| 0.01 * domain.width(k)).collect(),
            upper: (0..domain.dim()).map(|k| 2.0 * domain.width(k)).collect(),
        })
    }

    pub fn validate(&self, domain: &Domain) -> Result<()> {
        let d = domain.dim();
        self.kernel.check_dim(d)?;
        if !(0.0..=1.0).contains(&self.epsilon) {
            return Err(Error::InvalidConfig("epsilon must lie in [0, 1]".into()));
        }
        if !(self.sigma.is_finite() && self.sigma > 0.0) {
            return Err(Error::InvalidConfig("sigma must be positive".into()));
        }
        if self.budget == 0 {
            return Err(Error::InvalidConfig("budget must be >= 1".into()));
        }
        let k = self.initial_size(domain);
        if k == 0 {
            return Err(Error::InvalidConfig("initial design must be non-empty".into()));
        }
        if self.variant.estimates_theta() {
            if k < 2 {
                return Err(Error::InvalidConfig(
                    "estimating variants need an initial design of at least 2 points".into(),
                ));
            }
            if self.mle_grid == 0 {
                return Err(Error::InvalidConfig("mle_grid must be >= 1".into()));
            }
            let b = self.bounds(domain);
            b.validate()?;
            if b.lower.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: b.lower.len(),
                });
            }
        }
        if let Some(points) = &self.initial_design {
            for p in points {
                domain.check_dim(p)?;
                if !domain.contains(p) {
                    return Err(Error::InvalidConfig("initial design point outside the domain".into()));
                }
            }
            if let Some((i, j)) = self.kernel.find_duplicate(points) {
                return Err(Error::DuplicatePoints { first: i, second: j });
            }
        }
        Ok(())
    }
}

/// Per-θ incremental posteriors for the likelihood grid, brought up to date
/// only when an estimate is needed.
#[derive(Clone, Debug)]
struct MleGrid {
    family: KernelFamily,
    thetas: Vec<Vec<f64>>,
    models: Vec<Option<Posterior>>,
    synced: usize,
}

impl MleGrid {
    fn new(family: KernelFamily, bounds: &ThetaBounds, grid: usize) -> Self {
        MleGrid {
            family,
            thetas: bounds.grid(grid),
            models: Vec::new(),
            synced: 0,
        }
    }

    /// Absorb the observations added since the last call. Grid points whose
    /// factorization fails are dropped for the rest of the run.
    fn sync(&mut self, design: &DesignSet) -> Result<()> {
        if self.synced == 0 {
            self.models = self
                .thetas
                .iter()
                .map(|t| {
                    KernelSpec::new(self.family, t.clone())
                        .and_then(|spec| Posterior::fit(spec, design.clone()))
                        .ok()
                })
                .collect();
        } else {
            for i in self.synced..design.len() {
                let (x, z) = (&design.points()[i], design.values()[i]);
                for slot in &mut self.models {
                    if let Some(model) = slot.take() {
                        *slot = model.extend(x.clone(), z).ok();
                    }
                }
            }
        }
        self.synced = design.len();
        Ok(())
    }

    /// Index of the selected grid point.
    fn select(&self, design: &DesignSet) -> Result<usize> {
        select_theta(design, self.models.iter().map(|m| m.as_ref()))
    }
}

/// Argmax of the concentrated log-likelihood with ties to the later (larger)
/// grid point; constant data selects the last point.
fn select_theta<'a>(design: &DesignSet, models: impl Iterator<Item = Option<&'a Posterior>>) -> Result<usize> {
    let mut best: Option<(usize, f64)> = None;
    let mut last_ok = None;
    let constant = design.is_constant();
    for (i, model) in models.enumerate() {
        let Some(model) = model else { continue };
        last_ok = Some(i);
        if constant {
            continue;
        }
        let ll = model.concentrated_log_likelihood();
        if ll.is_nan() {
            continue;
        }
        if best.is_none_or(|(_, b)| ll >= b) {
            best = Some((i, ll));
        }
    }
    if constant {
        return last_ok.ok_or(Error::EstimationFailed);
    }
    best.map(|(i, _)| i).ok_or(Error::EstimationFailed)
}

/// Grid maximum-likelihood length-scales.
///
/// Maximizes `−n log R̂²(θ) − log det V_θ` over `grid` log-spaced values per
/// axis; grid points whose correlation matrix cannot be factored are
/// skipped. Constant data returns the upper bound.
pub fn estimate_theta_mle(
    design: &DesignSet,
    family: KernelFamily,
    bounds: &ThetaBounds,
    grid: usize,
) -> Result<Vec<f64>> {
    bounds.validate()?;
    if design.len() < 2 {
        return Err(Error::InvalidDesign("likelihood estimation needs n >= 2".into()));
    }
    if bounds.lower.len() != design.dim() {
        return Err(Error::DimensionMismatch {
            expected: design.dim(),
            found: bounds.lower.len(),
        });
    }
    let thetas = bounds.grid(grid.max(1));
    if design.is_constant() {
        return Ok(bounds.upper.clone());
    }
    let models: Vec<Option<Posterior>> = thetas
        .iter()
        .map(|t| {
            KernelSpec::new(family, t.clone())
                .and_then(|spec| Posterior::fit(spec, design.clone()))
                .ok()
        })
        .collect();
    let i = select_theta(design, models.iter().map(|m| m.as_ref()))?;
    Ok(thetas[i].clone())
}

/// `σ̂ = R̂_n(θ̂)`.
pub fn robust_sigma(design: &DesignSet, family: KernelFamily, theta: &[f64]) -> Result<f64> {
    let model = Posterior::fit(KernelSpec::new(family, theta.to_vec())?, design.clone())?;
    Ok(model.reduced_ss().sqrt())
}

/// Minimizer of the posterior mean over `domain`; the best observed point
/// when the mean is flat.
pub fn naive_recommend(design: &DesignSet, spec: &KernelSpec, domain: &Domain) -> Result<Point> {
    let model = Posterior::fit(spec.clone(), design.clone())?;
    let mut search = EiSearch::new(domain.clone(), DEFAULT_BUDGET, 0)?;
    mean_minimizer(&mut search, &model)
}

fn mean_minimizer(search: &mut EiSearch, model: &Posterior) -> Result<Point> {
    if model.design().is_constant() {
        return Ok(model.design().best_point().to_vec());
    }
    Ok(search.minimize_mean(model)?.0)
}

/// A running strategy: configuration, observations, RNG stream and cached
/// models.
#[derive(Clone, Debug)]
pub struct StrategyState {
    config: StrategyConfig,
    domain: Domain,
    seed: u64,
    rng: ChaCha8Rng,
    sequence: ScrambledSobol,
    search: EiSearch,
    design: Option<DesignSet>,
    fixed_model: Option<Posterior>,
    mle: MleGrid,
    pending: Option<Point>,
    sigma_hat: Option<f64>,
    theta_hat: Option<Vec<f64>>,
}

impl StrategyState {
    pub fn new(config: StrategyConfig, domain: Domain, seed: u64) -> Result<Self> {
        config.validate(&domain)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sequence = ScrambledSobol::new(domain.dim(), rng.random());
        let search = EiSearch::new(domain.clone(), config.budget, rng.random())?;
        let mle = MleGrid::new(config.kernel.family(), &config.bounds(&domain), config.mle_grid);
        Ok(StrategyState {
            config,
            domain,
            seed,
            rng,
            sequence,
            search,
            design: None,
            fixed_model: None,
            mle,
            pending: None,
            sigma_hat: None,
            theta_hat: None,
        })
    }

    pub fn config(&self) -> &StrategyConfig {
        &self.config
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Number of observations so far.
    pub fn step(&self) -> usize {
        self.design.as_ref().map_or(0, DesignSet::len)
    }

    pub fn design(&self) -> Option<&DesignSet> {
        self.design.as_ref()
    }

    /// `σ̂` used for the latest EI step of an estimating variant.
    pub fn sigma_hat(&self) -> Option<f64> {
        self.sigma_hat
    }

    /// `θ̂` used for the latest EI step of an estimating variant.
    pub fn theta_hat(&self) -> Option<&[f64]> {
        self.theta_hat.as_deref()
    }

    pub fn pending(&self) -> Option<&[f64]> {
        self.pending.as_deref()
    }

    /// Choose `x_{n+1}`. Must be followed by [`observe`](Self::observe)
    /// before the next call.
    pub fn next_design_point(&mut self) -> Result<Point> {
        if self.pending.is_some() {
            return Err(Error::Protocol(
                "next_design_point called twice without an observation".into(),
            ));
        }
        let x = self.choose()?;
        self.pending = Some(x.clone());
        Ok(x)
    }

    fn choose(&mut self) -> Result<Point> {
        let n = self.step();
        if self.config.epsilon > 0.0 && self.rng.random::<f64>() < self.config.epsilon {
            return Ok(self.domain.sample_uniform(&mut self.rng));
        }
        if n < self.config.initial_size(&self.domain) || self.config.variant == Variant::Naive {
            return Ok(self.sequence_point(n));
        }
        match self.config.variant {
            Variant::Naive => unreachable!(),
            Variant::EiFixed => {
                self.sync_fixed()?;
                let model = self.fixed_model.as_ref().ok_or_else(missing_model)?;
                let params = PriorParams::new(self.config.sigma, self.config.kernel.clone())?;
                self.search.maximize_ei(model, &params, &mut self.rng)
            }
            Variant::EiMle | Variant::EiRobust => {
                let design = self.design.as_ref().ok_or_else(missing_model)?;
                if design.is_constant() {
                    self.theta_hat = Some(self.config.bounds(&self.domain).upper);
                    self.sigma_hat = Some(0.0);
                    return Ok(self.domain.sample_uniform(&mut self.rng));
                }
                self.mle.sync(design)?;
                let idx = self.mle.select(design)?;
                let model = self.mle.models[idx].as_ref().ok_or_else(missing_model)?;
                let rss = model.reduced_ss();
                let sigma = match self.config.variant {
                    Variant::EiMle => (self.config.c_n.value(n) * rss).sqrt(),
                    _ => rss.sqrt(),
                };
                self.theta_hat = Some(self.mle.thetas[idx].clone());
                self.sigma_hat = Some(sigma);
                if !(sigma > 0.0) {
                    return Ok(self.domain.sample_uniform(&mut self.rng));
                }
                let params = PriorParams::new(sigma, model.spec().clone())?;
                self.search.maximize_ei(model, &params, &mut self.rng)
            }
        }
    }

    /// Bring the fixed-kernel posterior up to date with the design.
    fn sync_fixed(&mut self) -> Result<()> {
        let design = self.design.as_ref().ok_or_else(missing_model)?;
        let mut model = match self.fixed_model.take() {
            None => Posterior::fit(self.config.kernel.clone(), design.clone())?,
            Some(m) => m,
        };
        for i in model.len()..design.len() {
            model = model.extend(design.points()[i].clone(), design.values()[i])?;
        }
        self.fixed_model = Some(model);
        Ok(())
    }

    fn sequence_point(&self, n: usize) -> Point {
        match &self.config.initial_design {
            Some(points) if n < points.len() => points[n].clone(),
            _ => self.sequence.point_in(&self.domain, n as u64),
        }
    }

    /// Record `z = f(x)` for the pending point `x`.
    pub fn observe(&mut self, x: &[f64], z: f64) -> Result<()> {
        match &self.pending {
            None => {
                return Err(Error::Protocol(
                    "observation without a preceding next_design_point".into(),
                ))
            }
            Some(p) if p.as_slice() != x => {
                return Err(Error::Protocol(
                    "observed point differs from the proposed point".into(),
                ))
            }
            Some(_) => {}
        }
        if !z.is_finite() {
            return Err(Error::InvalidDesign(format!("non-finite observation {z}")));
        }
        let x = x.to_vec();
        match self.design.as_mut() {
            None => self.design = Some(DesignSet::single(x, z)?),
            Some(d) => d.push(x, z)?,
        }
        self.pending = None;
        Ok(())
    }

    /// `x*_n`: the lowest-index best observed point, or for `Naive` the
    /// minimizer of the posterior mean.
    pub fn recommend(&mut self) -> Result<Point> {
        let design = self.design.as_ref().ok_or(Error::EmptyDesign)?;
        if self.config.variant == Variant::Naive {
            if design.is_constant() {
                return Ok(design.best_point().to_vec());
            }
            self.sync_fixed()?;
            let model = self.fixed_model.as_ref().ok_or_else(missing_model)?;
            return mean_minimizer(&mut self.search, model);
        }
        Ok(design.best_point().to_vec())
    }
}

fn missing_model() -> Error {
    Error::Internal("strategy model missing".into())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::MaternNu;

    fn m52(theta: f64) -> KernelSpec {
        KernelSpec::matern(MaternNu::FiveHalves, vec![theta]).unwrap()
    }

    fn drive(state: &mut StrategyState, f: impl Fn(&[f64]) -> f64, steps: usize) -> Vec<Point> {
        (0..steps)
            .map(|_| {
                let x = state.next_design_point().unwrap();
                state.observe(&x, f(&x)).unwrap();
                x
            })
            .collect()
    }

    fn chi_square_uniform(xs: &[f64], bins: usize) -> f64 {
        let mut counts = vec![0.0; bins];
        for x in xs {
            counts[((x * bins as f64) as usize).min(bins - 1)] += 1.0;
        }
        let expected = xs.len() as f64 / bins as f64;
        counts.iter().map(|c| (c - expected) * (c - expected) / expected).sum()
    }

    // 99th percentile of χ² with 19 degrees of freedom.
    const CHI2_19_99: f64 = 36.19;

    #[test]
    fn cn_rules() {
        assert_eq!(CnRule::NLogN.value(2), 0.5);
        assert!((CnRule::NLogN.value(100) - 1.0 / (100.0 * 100f64.ln())).abs() < 1e-18);
        assert_eq!(CnRule::InverseN.value(4), 0.25);
    }

    #[test]
    fn theta_grid_has_exact_endpoints() {
        let b = ThetaBounds::new(vec![0.01, 0.1], vec![1.0, 0.1]).unwrap();
        let g = b.grid(5);
        assert_eq!(g.len(), 5);
        assert_eq!(g[0], vec![0.01, 0.1]);
        assert_eq!(g[4], vec![1.0, 0.1]);
        assert!(ThetaBounds::new(vec![1.0], vec![0.5]).is_err());
    }

    #[test]
    fn protocol_errors() {
        let mut s = StrategyState::new(StrategyConfig::new(Variant::EiFixed, m52(0.2)), Domain::unit(1), 1).unwrap();
        assert_eq!(s.recommend().unwrap_err(), Error::EmptyDesign);
        assert!(matches!(s.observe(&[0.5], 1.0), Err(Error::Protocol(_))));
        let x = s.next_design_point().unwrap();
        assert!(matches!(s.next_design_point(), Err(Error::Protocol(_))));
        assert!(matches!(s.observe(&[x[0] + 0.1], 1.0), Err(Error::Protocol(_))));
        s.observe(&x, 1.0).unwrap();
        assert_eq!(s.recommend().unwrap(), x);
    }

    #[test]
    fn recommend_ties_keep_earliest() {
        let mut s = StrategyState::new(StrategyConfig::new(Variant::EiFixed, m52(0.2)), Domain::unit(1), 3).unwrap();
        let values = [3.0, 1.0, 2.0, 1.0];
        let mut pts = Vec::new();
        for z in values {
            let x = s.next_design_point().unwrap();
            s.observe(&x, z).unwrap();
            pts.push(x);
        }
        assert_eq!(s.recommend().unwrap(), pts[1]);
    }

    #[test]
    fn invalid_configs_rejected() {
        let d = Domain::unit(1);
        assert!(StrategyState::new(StrategyConfig::new(Variant::EiFixed, m52(0.2)).with_epsilon(1.5), d.clone(), 0).is_err());
        assert!(StrategyState::new(StrategyConfig::new(Variant::EiMle, m52(0.2)).with_k_init(1), d.clone(), 0).is_err());
        assert!(StrategyState::new(
            StrategyConfig::new(Variant::EiRobust, m52(0.2)).with_theta_bounds(vec![1.0], vec![0.1]),
            d.clone(),
            0
        )
        .is_err());
        assert!(StrategyState::new(StrategyConfig::new(Variant::EiFixed, m52(0.2)).with_sigma(0.0), d, 0).is_err());
    }

    #[test]
    fn robust_on_constant_data_is_uniform() {
        let cfg = StrategyConfig::new(Variant::EiRobust, m52(0.2)).with_k_init(2).with_mle_grid(4);
        let mut s = StrategyState::new(cfg, Domain::unit(1), 17).unwrap();
        let pts = drive(&mut s, |_| 1.0, 1000);
        let xs: Vec<f64> = pts[2..].iter().map(|p| p[0]).collect();
        assert!(chi_square_uniform(&xs, 20) < CHI2_19_99);
        assert_eq!(s.sigma_hat(), Some(0.0));
        assert_eq!(s.theta_hat().unwrap(), s.config().bounds(s.domain()).upper.as_slice());
    }

    #[test]
    fn likelihood_variant_on_constant_data_passes_ks() {
        let cfg = StrategyConfig::new(Variant::EiMle, m52(0.2)).with_k_init(2);
        let mut s = StrategyState::new(cfg, Domain::unit(1), 23).unwrap();
        let pts = drive(&mut s, |_| -4.0, 1002);
        let mut xs: Vec<f64> = pts[2..].iter().map(|p| p[0]).collect();
        xs.sort_by(f64::total_cmp);
        let n = xs.len() as f64;
        let ks = xs
            .iter()
            .enumerate()
            .map(|(i, x)| f64::max((i as f64 + 1.0) / n - x, x - i as f64 / n))
            .fold(0.0, f64::max);
        // 1% critical value of the one-sample Kolmogorov-Smirnov statistic
        assert!(ks < 1.63 / n.sqrt(), "KS statistic {ks}");
    }

    #[test]
    fn full_epsilon_is_uniform() {
        let cfg = StrategyConfig::new(Variant::EiFixed, m52(0.2)).with_epsilon(1.0);
        let mut s = StrategyState::new(cfg, Domain::unit(1), 5).unwrap();
        let mut xs = Vec::with_capacity(10_000);
        for i in 0..10_000 {
            let x = s.next_design_point().unwrap();
            s.observe(&x, i as f64).unwrap_or_else(|_| panic!("step {i}"));
            xs.push(x[0]);
        }
        assert!(chi_square_uniform(&xs, 20) < CHI2_19_99);
    }

    #[test]
    fn fixed_ei_on_single_kernel_translate() {
        let spec = m52(0.2);
        let f = |x: &[f64]| -spec.eval_scaled(&[x[0] - 0.5]).unwrap();
        let mut s = StrategyState::new(StrategyConfig::new(Variant::EiFixed, m52(0.2)), Domain::unit(1), 2).unwrap();
        let mut prev = f64::INFINITY;
        for n in 1..=30 {
            let x = s.next_design_point().unwrap();
            s.observe(&x, f(&x)).unwrap();
            assert_eq!(s.step(), n);
            let best = s.design().unwrap().best_value();
            assert!(best <= prev);
            prev = best;
        }
        assert!(prev + 1.0 < 1e-3);
    }

    #[test]
    fn replay_is_bit_identical() {
        for variant in Variant::ALL {
            let cfg = StrategyConfig::new(variant, m52(0.15)).with_k_init(3).with_mle_grid(6).with_budget(64);
            let f = |x: &[f64]| (7.0 * x[0]).sin() + x[0];
            let a = drive(&mut StrategyState::new(cfg.clone(), Domain::unit(1), 9).unwrap(), f, 15);
            let b = drive(&mut StrategyState::new(cfg, Domain::unit(1), 9).unwrap(), f, 15);
            assert_eq!(a, b, "{variant}");
        }
    }

    #[test]
    fn mle_bounds_respected_and_degenerate_cases() {
        let pts: Vec<Point> = (0..8).map(|i| vec![i as f64 / 7.0]).collect();
        let zs: Vec<f64> = pts.iter().map(|p| (5.0 * p[0]).cos()).collect();
        let design = DesignSet::new(pts.clone(), zs).unwrap();
        let fam = KernelFamily::Matern(MaternNu::FiveHalves);
        let b = ThetaBounds::new(vec![0.3], vec![0.3]).unwrap();
        assert_eq!(estimate_theta_mle(&design, fam, &b, 10).unwrap(), vec![0.3]);
        let b = ThetaBounds::new(vec![0.01], vec![3.0]).unwrap();
        let t = estimate_theta_mle(&design, fam, &b, 15).unwrap();
        assert!(t[0] >= 0.01 && t[0] <= 3.0);
        let flat = DesignSet::new(pts, vec![2.0; 8]).unwrap();
        assert_eq!(estimate_theta_mle(&flat, fam, &b, 15).unwrap(), vec![3.0]);
        assert_eq!(robust_sigma(&flat, fam, &[0.2]).unwrap(), 0.0);
    }

    #[test]
    fn robust_sigma_bounded_by_norm_for_single_translate() {
        let spec = m52(0.2);
        let fam = spec.family();
        let f = |x: f64| spec.eval_scaled(&[x - 0.4]).unwrap();
        let mut pts = vec![vec![0.4]];
        let mut prev = 0.0;
        for x in [0.1, 0.75, 0.9] {
            pts.push(vec![x]);
            let zs: Vec<f64> = pts.iter().map(|p| f(p[0])).collect();
            let design = DesignSet::new(pts.clone(), zs).unwrap();
            let s = robust_sigma(&design, fam, &[0.2]).unwrap();
            assert!(s <= 1.0 + 1e-12);
            assert!(s >= prev - 1e-12);
            prev = s;
        }
    }

    #[test]
    fn naive_recommend_linear_function() {
        let design = DesignSet::new(vec![vec![0.0], vec![0.5], vec![1.0]], vec![0.0, 0.5, 1.0]).unwrap();
        let x = naive_recommend(&design, &m52(0.3), &Domain::unit(1)).unwrap();
        assert!(x[0] < 1e-2, "{x:?}");
        let flat = DesignSet::new(vec![vec![0.2], vec![0.8]], vec![1.0, 1.0]).unwrap();
        assert_eq!(naive_recommend(&flat, &m52(0.3), &Domain::unit(1)).unwrap(), vec![0.2]);
    }

    #[test]
    fn naive_follows_fixed_sequence() {
        let cfg = StrategyConfig::new(Variant::Naive, m52(0.2));
        let mut a = StrategyState::new(cfg.clone(), Domain::unit(1), 4).unwrap();
        let mut b = StrategyState::new(cfg, Domain::unit(1), 4).unwrap();
        let pa = drive(&mut a, |x| x[0], 20);
        let pb = drive(&mut b, |x| -x[0] * x[0], 20);
        assert_eq!(pa, pb);
    }

    #[test]
    fn config_toml_round_trip() {
        let text = r#"
variant = "ei_mle"
epsilon = 0.1
k_init = 4
c_n = "inverse_n"
mle_grid = 12
kernel = { family = "matern", nu = "3/2", theta = [0.2] }
theta_bounds = { lower = [0.01], upper = [1.0] }
"#;
        let cfg: StrategyConfig = toml::from_str(text).unwrap();
        assert_eq!(cfg.variant, Variant::EiMle);
        assert_eq!(cfg.c_n, CnRule::InverseN);
        assert_eq!(cfg.budget, DEFAULT_BUDGET);
        let back: StrategyConfig = toml::from_str(&toml::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(back, cfg);
    }
}
