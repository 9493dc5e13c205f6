//! Test objectives with known ground truth.
//!
//! * [`RkhsSpanFunction`]: finite kernel expansions, whose native-space norm
//!   is exactly `√(λᵀVλ)`.
//! * [`BumpFunction`]: the standard mollifier, smooth with compact support.
//! * [`CounterexamplePair`]: a plateau function and the same function with a
//!   narrow negative spike hidden on the plateau.
//! * [`BumpFamily`]: scaled bumps on the cells of a regular grid, used for
//!   the lower-bound adversary.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::domain::{Domain, Point};
use crate::error::{Error, Result};
use crate::kernel::KernelSpec;

/// `μ + Σ λ_i K_θ(x − c_i)`.
#[derive(Clone, Debug, PartialEq)]
pub struct RkhsSpanFunction {
    spec: KernelSpec,
    centers: Vec<Point>,
    weights: Vec<f64>,
    offset: f64,
    norm: f64,
}

impl RkhsSpanFunction {
    pub fn new(spec: KernelSpec, centers: Vec<Point>, weights: Vec<f64>, offset: f64) -> Result<Self> {
        if centers.len() != weights.len() {
            return Err(Error::InvalidConfig(format!(
                "{} centers but {} weights",
                centers.len(),
                weights.len()
            )));
        }
        let gram = spec.gram(&centers)?;
        let lambda = nalgebra::DVector::from_column_slice(&weights);
        let norm2 = lambda.dot(&(&gram * &lambda));
        Ok(RkhsSpanFunction {
            spec,
            centers,
            weights,
            offset,
            norm: norm2.max(0.0).sqrt(),
        })
    }

    /// `m` centers uniform on `domain` with weights uniform on `[−1, 1]`.
    pub fn random<R: Rng + ?Sized>(spec: KernelSpec, m: usize, domain: &Domain, rng: &mut R) -> Result<Self> {
        let centers: Vec<Point> = (0..m).map(|_| domain.sample_uniform(rng)).collect();
        let weights = (0..m).map(|_| rng.random_range(-1.0..=1.0)).collect();
        Self::new(spec, centers, weights, 0.0)
    }

    pub fn spec(&self) -> &KernelSpec {
        &self.spec
    }

    pub fn centers(&self) -> &[Point] {
        &self.centers
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    /// `√(λᵀVλ)`.
    pub fn norm(&self) -> f64 {
        self.norm
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.offset
            + self
                .centers
                .iter()
                .zip(&self.weights)
                .map(|(c, l)| l * self.spec.corr(c, x))
                .sum::<f64>()
    }

    /// Dense-grid minimum polished by golden-section search, with the
    /// centers added as candidates.
    pub fn minimum(&self, domain: &Domain) -> (Point, f64) {
        grid_minimum(domain, |x| self.eval(x), &self.centers)
    }
}

/// `depth · exp(1 − 1/(1 − r²))` for `r = ‖x − center‖/radius < 1`, else 0.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BumpFunction {
    pub center: Point,
    pub radius: f64,
    pub depth: f64,
}

impl BumpFunction {
    pub fn new(center: Point, radius: f64, depth: f64) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::InvalidConfig("bump radius must be positive".into()));
        }
        Ok(BumpFunction { center, radius, depth })
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let r2 = x
            .iter()
            .zip(&self.center)
            .map(|(a, c)| (a - c) * (a - c))
            .sum::<f64>()
            / (self.radius * self.radius);
        if r2 < 1.0 {
            self.depth * (1.0 - 1.0 / (1.0 - r2)).exp()
        } else {
            0.0
        }
    }

    pub fn minimum(&self) -> f64 {
        self.depth.min(0.0)
    }
}

/// Smooth step: 0 for `t ≤ 0`, 1 for `t ≥ 1`, `C^∞` in between.
pub fn smoothstep(t: f64) -> f64 {
    let h = |s: f64| if s > 0.0 { (-1.0 / s).exp() } else { 0.0 };
    if t <= 0.0 {
        0.0
    } else if t >= 1.0 {
        1.0
    } else {
        let a = h(t);
        a / (a + h(1.0 - t))
    }
}

/// A plateau objective and its spiked twin.
///
/// Geometry is in unit-cube coordinates around the domain center: the outer
/// region `V₀ = {r ≥ r₀}` where the plateau is 0, the inner region
/// `V₁ = {r ≤ r₁}` where it is 1, and a ball `W ⊂ V₁` carrying a bump of
/// depth −2. In 1-d with the defaults this is `V₀ = [0, 0.3] ∪ [0.7, 1]`,
/// `V₁ = [0.45, 0.55]`, `W = (0.47, 0.53)`.
#[derive(Clone, Debug, PartialEq)]
pub struct CounterexamplePair {
    domain: Domain,
    center: Point,
    outer_radius: f64,
    inner_radius: f64,
    spike: BumpFunction,
}

impl CounterexamplePair {
    pub const DEFAULT_V0_FRACTION: f64 = 0.6;
    pub const DEFAULT_W_RADIUS: f64 = 0.03;
    /// Regret level a stuck run cannot get below.
    pub const DELTA: f64 = 1.0;

    /// `V₀` starts at `r₀ = (1 − v0_fraction)/2` (so in 1-d it covers that
    /// fraction of the interval), `V₁` has radius `r₀/4`, and `W` has radius
    /// `w_radius`. With `seed = None` the spike sits at the center; otherwise
    /// its center is drawn uniformly among positions keeping `W ⊂ V₁`.
    pub fn new(domain: &Domain, v0_fraction: f64, w_radius: f64, seed: Option<u64>) -> Result<Self> {
        if !(0.0 < v0_fraction && v0_fraction < 1.0) {
            return Err(Error::InvalidConfig("v0_fraction must lie in (0, 1)".into()));
        }
        let outer_radius = 0.5 * (1.0 - v0_fraction);
        let inner_radius = 0.25 * outer_radius;
        if !(w_radius > 0.0 && w_radius < inner_radius) {
            return Err(Error::InvalidConfig(format!(
                "spike radius must lie in (0, {inner_radius})"
            )));
        }
        let d = domain.dim();
        let center = vec![0.5; d];
        let mut spike_center = center.clone();
        if let Some(seed) = seed {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let slack = inner_radius - w_radius;
            loop {
                let offset: Vec<f64> = (0..d).map(|_| rng.random_range(-slack..=slack)).collect();
                if offset.iter().map(|o| o * o).sum::<f64>() <= slack * slack {
                    spike_center = center.iter().zip(&offset).map(|(c, o)| c + o).collect();
                    break;
                }
            }
        }
        Ok(CounterexamplePair {
            domain: domain.clone(),
            center,
            outer_radius,
            inner_radius,
            spike: BumpFunction::new(spike_center, w_radius, -2.0)?,
        })
    }

    pub fn standard(domain: &Domain) -> Result<Self> {
        Self::new(domain, Self::DEFAULT_V0_FRACTION, Self::DEFAULT_W_RADIUS, None)
    }

    fn radius_of(&self, x: &[f64]) -> f64 {
        let u = self.domain.to_unit(x);
        u.iter()
            .zip(&self.center)
            .map(|(a, c)| (a - c) * (a - c))
            .sum::<f64>()
            .sqrt()
    }

    pub fn plateau(&self, x: &[f64]) -> f64 {
        let r = self.radius_of(x);
        smoothstep((self.outer_radius - r) / (self.outer_radius - self.inner_radius))
    }

    pub fn spiked(&self, x: &[f64]) -> f64 {
        self.plateau(x) + self.spike.eval(&self.domain.to_unit(x))
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn in_outer(&self, x: &[f64]) -> bool {
        self.radius_of(x) >= self.outer_radius
    }

    pub fn in_inner(&self, x: &[f64]) -> bool {
        self.radius_of(x) <= self.inner_radius
    }

    /// Whether `x` lies in the open spike ball `W`.
    pub fn in_spike(&self, x: &[f64]) -> bool {
        let u = self.domain.to_unit(x);
        let d2: f64 = u
            .iter()
            .zip(&self.spike.center)
            .map(|(a, c)| (a - c) * (a - c))
            .sum();
        d2 < self.spike.radius * self.spike.radius
    }

    /// The spike in unit-cube coordinates.
    pub fn spike(&self) -> &BumpFunction {
        &self.spike
    }

    pub fn outer_radius(&self) -> f64 {
        self.outer_radius
    }

    pub fn inner_radius(&self) -> f64 {
        self.inner_radius
    }

    pub fn spike_center(&self) -> Point {
        self.domain.from_unit(&self.spike.center)
    }

    pub fn plateau_min(&self) -> f64 {
        0.0
    }

    pub fn spiked_min(&self) -> f64 {
        -1.0
    }
}

/// `(2k)^d` bumps `ψ_m(x) = C(2k)^{−ν} ψ(2kx − m)` on the unit cube, where
/// `ψ` is a negative unit-depth bump inscribed in `[0, 1]^d`.
#[derive(Clone, Debug, PartialEq)]
pub struct BumpFamily {
    k: usize,
    d: usize,
    nu: f64,
    amplitude: f64,
}

impl BumpFamily {
    pub fn new(k: usize, d: usize, nu: f64, amplitude: f64) -> Result<Self> {
        if k == 0 || d == 0 {
            return Err(Error::InvalidConfig("bump family needs k >= 1 and d >= 1".into()));
        }
        if !(nu > 0.0 && amplitude > 0.0) {
            return Err(Error::InvalidConfig(
                "bump family needs positive smoothness and amplitude".into(),
            ));
        }
        Ok(BumpFamily { k, d, nu, amplitude })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    /// Cells per axis, `2k`.
    pub fn cells_per_axis(&self) -> usize {
        2 * self.k
    }

    pub fn len(&self) -> usize {
        self.cells_per_axis().pow(self.d as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// `C(2k)^{−ν}`, the depth of every member.
    pub fn depth(&self) -> f64 {
        self.amplitude * (self.cells_per_axis() as f64).powf(-self.nu)
    }

    /// Minimum of every member, `−C(2k)^{−ν}`.
    pub fn member_min(&self) -> f64 {
        -self.depth()
    }

    /// Grid cell of member `m` (axis 0 varies fastest).
    pub fn cell(&self, m: usize) -> Vec<usize> {
        let n = self.cells_per_axis();
        let mut rest = m;
        (0..self.d)
            .map(|_| {
                let c = rest % n;
                rest /= n;
                c
            })
            .collect()
    }

    /// Closed support cell `[m/(2k), (m+1)/(2k)]`, as (lower, upper).
    pub fn support(&self, m: usize) -> (Point, Point) {
        let h = 1.0 / self.cells_per_axis() as f64;
        let cell = self.cell(m);
        (
            cell.iter().map(|&c| c as f64 * h).collect(),
            cell.iter().map(|&c| (c + 1) as f64 * h).collect(),
        )
    }

    /// `ψ_m(x)` for `x` in unit-cube coordinates.
    pub fn eval_member(&self, m: usize, x: &[f64]) -> f64 {
        let n = self.cells_per_axis() as f64;
        let cell = self.cell(m);
        let r2: f64 = x
            .iter()
            .zip(&cell)
            .map(|(v, &c)| {
                let y = n * v - c as f64 - 0.5;
                4.0 * y * y
            })
            .sum();
        if r2 < 1.0 {
            -self.depth() * (1.0 - 1.0 / (1.0 - r2)).exp()
        } else {
            0.0
        }
    }

    /// Center of member `m`'s cell, where it attains its minimum.
    pub fn member_center(&self, m: usize) -> Point {
        let h = 1.0 / self.cells_per_axis() as f64;
        self.cell(m).iter().map(|&c| (c as f64 + 0.5) * h).collect()
    }
}

/// Serializable description of an objective, resolved against a domain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ObjectiveConfig {
    Constant {
        value: f64,
    },
    Span {
        kernel: KernelSpec,
        centers: Vec<Point>,
        weights: Vec<f64>,
        #[serde(default)]
        offset: f64,
    },
    /// Centers uniform on the domain and weights uniform on `[−1, 1]`.
    RandomSpan {
        kernel: KernelSpec,
        centers: usize,
        seed: u64,
    },
    Bump {
        center: Point,
        radius: f64,
        depth: f64,
    },
    Plateau {
        #[serde(default = "default_v0_fraction")]
        v0_fraction: f64,
        #[serde(default = "default_w_radius")]
        w_radius: f64,
        #[serde(default)]
        seed: Option<u64>,
    },
    Spiked {
        #[serde(default = "default_v0_fraction")]
        v0_fraction: f64,
        #[serde(default = "default_w_radius")]
        w_radius: f64,
        #[serde(default)]
        seed: Option<u64>,
    },
    FamilyMember {
        k: usize,
        nu: f64,
        amplitude: f64,
        index: usize,
    },
}

fn default_v0_fraction() -> f64 {
    CounterexamplePair::DEFAULT_V0_FRACTION
}

fn default_w_radius() -> f64 {
    CounterexamplePair::DEFAULT_W_RADIUS
}

#[derive(Clone, Debug, PartialEq)]
enum Func {
    Constant(f64),
    Span(RkhsSpanFunction),
    Bump(BumpFunction),
    Plateau(CounterexamplePair),
    Spiked(CounterexamplePair),
    FamilyMember(BumpFamily, usize),
}

/// An objective bound to a domain, together with its descriptor.
#[derive(Clone, Debug, PartialEq)]
pub struct Objective {
    config: ObjectiveConfig,
    domain: Domain,
    func: Func,
}

impl Objective {
    pub fn build(config: ObjectiveConfig, domain: &Domain) -> Result<Self> {
        let d = domain.dim();
        let func = match &config {
            ObjectiveConfig::Constant { value } => Func::Constant(*value),
            ObjectiveConfig::Span {
                kernel,
                centers,
                weights,
                offset,
            } => {
                kernel.check_dim(d)?;
                for c in centers {
                    domain.check_dim(c)?;
                }
                Func::Span(RkhsSpanFunction::new(kernel.clone(), centers.clone(), weights.clone(), *offset)?)
            }
            ObjectiveConfig::RandomSpan { kernel, centers, seed } => {
                kernel.check_dim(d)?;
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                Func::Span(RkhsSpanFunction::random(kernel.clone(), *centers, domain, &mut rng)?)
            }
            ObjectiveConfig::Bump { center, radius, depth } => {
                domain.check_dim(center)?;
                Func::Bump(BumpFunction::new(center.clone(), *radius, *depth)?)
            }
            ObjectiveConfig::Plateau {
                v0_fraction,
                w_radius,
                seed,
            } => Func::Plateau(CounterexamplePair::new(domain, *v0_fraction, *w_radius, *seed)?),
            ObjectiveConfig::Spiked {
                v0_fraction,
                w_radius,
                seed,
            } => Func::Spiked(CounterexamplePair::new(domain, *v0_fraction, *w_radius, *seed)?),
            ObjectiveConfig::FamilyMember { k, nu, amplitude, index } => {
                let family = BumpFamily::new(*k, d, *nu, *amplitude)?;
                if *index >= family.len() {
                    return Err(Error::InvalidConfig(format!(
                        "family member {index} out of range (family has {})",
                        family.len()
                    )));
                }
                Func::FamilyMember(family, *index)
            }
        };
        Ok(Objective {
            config,
            domain: domain.clone(),
            func,
        })
    }

    pub fn constant(value: f64, domain: &Domain) -> Self {
        Objective {
            config: ObjectiveConfig::Constant { value },
            domain: domain.clone(),
            func: Func::Constant(value),
        }
    }

    pub fn config(&self) -> &ObjectiveConfig {
        &self.config
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match &self.func {
            Func::Constant(v) => *v,
            Func::Span(f) => f.eval(x),
            Func::Bump(b) => b.eval(x),
            Func::Plateau(p) => p.plateau(x),
            Func::Spiked(p) => p.spiked(x),
            Func::FamilyMember(fam, m) => fam.eval_member(*m, &self.domain.to_unit(x)),
        }
    }

    /// `min f` over the domain: exact where the construction fixes it,
    /// otherwise a refined dense-grid estimate.
    pub fn minimum(&self) -> f64 {
        match &self.func {
            Func::Constant(v) => *v,
            Func::Span(f) => f.minimum(&self.domain).1,
            Func::Bump(b) => {
                if b.depth < 0.0 {
                    b.depth
                } else {
                    grid_minimum(&self.domain, |x| b.eval(x), &[]).1.min(0.0)
                }
            }
            Func::Plateau(p) => p.plateau_min(),
            Func::Spiked(p) => p.spiked_min(),
            Func::FamilyMember(fam, _) => fam.member_min(),
        }
    }

    /// Whether the minimum comes from the construction rather than a grid.
    pub fn minimum_is_exact(&self) -> bool {
        !matches!(self.func, Func::Span(_))
    }

    pub fn counterexample(&self) -> Option<&CounterexamplePair> {
        match &self.func {
            Func::Plateau(p) | Func::Spiked(p) => Some(p),
            _ => None,
        }
    }

    pub fn span(&self) -> Option<&RkhsSpanFunction> {
        match &self.func {
            Func::Span(f) => Some(f),
            _ => None,
        }
    }
}

/// Grid nodes per axis for dense minimum estimates.
fn grid_per_axis(d: usize) -> usize {
    match d {
        1 => 10_001,
        2 => 301,
        _ => ((1e5f64).powf(1.0 / d as f64).floor() as usize).max(3),
    }
}

/// Minimum of `f` on a regular grid over `domain` plus `extra` points, with
/// the five best starting points polished by coordinate-wise golden-section
/// search.
pub fn grid_minimum(domain: &Domain, f: impl Fn(&[f64]) -> f64, extra: &[Point]) -> (Point, f64) {
    let d = domain.dim();
    let per = grid_per_axis(d);
    let total = per.pow(d as u32);
    let mut scored: Vec<(f64, Point)> = Vec::with_capacity(total + extra.len());
    let mut idx = vec![0usize; d];
    for _ in 0..total {
        let u: Vec<f64> = idx.iter().map(|&i| i as f64 / (per - 1) as f64).collect();
        let x = domain.from_unit(&u);
        scored.push((f(&x), x));
        for slot in idx.iter_mut() {
            *slot += 1;
            if *slot < per {
                break;
            }
            *slot = 0;
        }
    }
    for p in extra {
        if domain.contains(p) {
            scored.push((f(p), p.clone()));
        }
    }
    scored.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (mut best_v, mut best_x) = scored[0].clone();
    for (v0, x0) in scored.iter().take(5) {
        let (x, v) = golden_polish(domain, &f, x0.clone(), *v0, 1.0 / (per - 1) as f64);
        if v < best_v {
            best_v = v;
            best_x = x;
        }
    }
    (best_x, best_v)
}

fn golden_polish(domain: &Domain, f: &impl Fn(&[f64]) -> f64, mut x: Point, mut fx: f64, unit_step: f64) -> (Point, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    for _sweep in 0..3 {
        for k in 0..x.len() {
            let w = domain.width(k);
            let mut a = (x[k] - unit_step * w).max(domain.lower()[k]);
            let mut b = (x[k] + unit_step * w).min(domain.upper()[k]);
            let mut probe = x.clone();
            let mut eval = |t: f64| {
                probe[k] = t;
                f(&probe)
            };
            let mut c = b - INV_PHI * (b - a);
            let mut e = a + INV_PHI * (b - a);
            let (mut fc, mut fe) = (eval(c), eval(e));
            for _ in 0..100 {
                if b - a <= 1e-12 * w {
                    break;
                }
                if fc < fe {
                    b = e;
                    e = c;
                    fe = fc;
                    c = b - INV_PHI * (b - a);
                    fc = eval(c);
                } else {
                    a = c;
                    c = e;
                    fc = fe;
                    e = a + INV_PHI * (b - a);
                    fe = eval(e);
                }
            }
            for t in [0.5 * (a + b), a, b] {
                let v = eval(t);
                if v < fx {
                    fx = v;
                    x[k] = t;
                }
            }
        }
    }
    (x, fx)
}
