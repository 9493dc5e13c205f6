//! Expected improvement and its maximization over a box.

use rand::Rng;

use crate::domain::{Domain, Point};
use crate::error::{Error, Result};
use crate::kernel::{KernelSpec, DUPLICATE_TOL};
use crate::lowdisc::ScrambledSobol;
use crate::posterior::{Moments, Posterior};

pub use crate::normal::tau;

/// Default number of low-discrepancy candidates per search.
pub const DEFAULT_BUDGET: usize = 512;

/// How many of the best candidates are polished by golden-section search.
const REFINE_TOP: usize = 4;
const GOLDEN_MAX_ITER: usize = 50;
const GOLDEN_TOL: f64 = 1e-6;
const MAX_PROJECTIONS: usize = 6;

/// Prior scale `σ` together with the kernel (which carries `θ`).
#[derive(Clone, Debug, PartialEq)]
pub struct PriorParams {
    sigma: f64,
    spec: KernelSpec,
}

impl PriorParams {
    pub fn new(sigma: f64, spec: KernelSpec) -> Result<Self> {
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "prior scale must be positive, got {sigma}"
            )));
        }
        Ok(PriorParams { sigma, spec })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn spec(&self) -> &KernelSpec {
        &self.spec
    }
}

/// `ρ(y, s) = yΦ(y/s) + sφ(y/s)` for `s > 0`, and `max(y, 0)` for `s = 0`.
pub fn rho(y: f64, s: f64) -> f64 {
    if s > 0.0 {
        let t = y / s;
        if t.is_finite() {
            return s * tau(t);
        }
    }
    y.max(0.0)
}

#[inline]
fn ei_from_moments(best: f64, sigma: f64, m: Moments) -> f64 {
    rho(best - m.mean, sigma * m.sd())
}

/// `EI_n(x) = ρ(z*_n − f̂_n(x), σ s_n(x))`.
///
/// The posterior is exact at observed points, so EI there is
/// `max(z*_n − z_i, 0) = 0`.
pub fn expected_improvement(model: &Posterior, params: &PriorParams, x: &[f64]) -> Result<f64> {
    if model.spec() != params.spec() {
        return Err(Error::InvalidConfig(
            "posterior was fitted with a different kernel than the prior".into(),
        ));
    }
    let m = model.predict(x)?;
    let design = model.design();
    if design
        .points()
        .iter()
        .any(|p| model.spec().scaled_sup_dist(p, x) < DUPLICATE_TOL)
    {
        return Ok(0.0);
    }
    Ok(ei_from_moments(design.best_value(), params.sigma(), m))
}

/// Maximize EI with a fresh candidate set drawn from `rng`.
pub fn maximize_ei<R: Rng + ?Sized>(
    model: &Posterior,
    params: &PriorParams,
    domain: &Domain,
    budget: usize,
    rng: &mut R,
) -> Result<Point> {
    let mut search = EiSearch::new(domain.clone(), budget, rng.random())?;
    search.maximize_ei(model, params, rng)
}

/// Candidate-plus-refinement optimizer over a box.
///
/// The candidate set is fixed at construction, so a strategy that keeps one
/// `EiSearch` for a whole run pays `O(nm)` per step to extend the cached
/// projections `L⁻¹v(c)` of every candidate `c` instead of `O(n²m)`.
#[derive(Clone, Debug)]
pub struct EiSearch {
    domain: Domain,
    candidates: Vec<Point>,
    projections: Vec<Projection>,
    tick: u64,
}

/// `W = L⁻¹ V_{X,C}` for one kernel, grown row by row, with running
/// per-candidate sums `Σw²`, `Σ(L⁻¹1)w`, `Σ(L⁻¹z)w`.
#[derive(Clone, Debug)]
struct Projection {
    spec: KernelSpec,
    jitter: f64,
    points: Vec<Point>,
    rows: Vec<f64>,
    ww: Vec<f64>,
    w1: Vec<f64>,
    wz: Vec<f64>,
    last_used: u64,
}

impl Projection {
    fn new(spec: KernelSpec, jitter: f64, m: usize) -> Self {
        Projection {
            spec,
            jitter,
            points: Vec::new(),
            rows: Vec::new(),
            ww: vec![0.0; m],
            w1: vec![0.0; m],
            wz: vec![0.0; m],
            last_used: 0,
        }
    }

    fn matches(&self, model: &Posterior) -> bool {
        let design = model.design().points();
        self.spec == *model.spec()
            && self.jitter == model.jitter()
            && self.points.len() <= design.len()
            && self.points.iter().zip(design).all(|(a, b)| a == b)
    }

    fn sync(&mut self, model: &Posterior, candidates: &[Point]) {
        let m = candidates.len();
        let factor = model.factor();
        let design = model.design().points();
        let (u1, uz) = (model.u1(), model.uz());
        for i in self.points.len()..design.len() {
            let xi = &design[i];
            let mut row: Vec<f64> = candidates.iter().map(|c| self.spec.corr(xi, c)).collect();
            let lrow = factor.row(i);
            for (j, lij) in lrow[..i].iter().enumerate() {
                let prev = &self.rows[j * m..(j + 1) * m];
                for (r, p) in row.iter_mut().zip(prev) {
                    *r -= lij * p;
                }
            }
            let inv = 1.0 / lrow[i];
            for c in 0..m {
                let w = row[c] * inv;
                row[c] = w;
                self.ww[c] += w * w;
                self.w1[c] += u1[i] * w;
                self.wz[c] += uz[i] * w;
            }
            self.rows.extend_from_slice(&row);
            self.points.push(xi.clone());
        }
    }
}

impl EiSearch {
    /// `budget` scrambled Sobol candidates on `domain`.
    pub fn new(domain: Domain, budget: usize, seed: u32) -> Result<Self> {
        if budget == 0 {
            return Err(Error::InvalidConfig("candidate budget must be >= 1".into()));
        }
        let candidates = ScrambledSobol::new(domain.dim(), seed).take_in(&domain, budget);
        Ok(EiSearch {
            domain,
            candidates,
            projections: Vec::new(),
            tick: 0,
        })
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn candidates(&self) -> &[Point] {
        &self.candidates
    }

    /// The EI maximizer, or a uniform random point when EI vanishes on every
    /// examined point or the maximizer coincides with a design point.
    pub fn maximize_ei<R: Rng + ?Sized>(
        &mut self,
        model: &Posterior,
        params: &PriorParams,
        rng: &mut R,
    ) -> Result<Point> {
        if model.spec() != params.spec() {
            return Err(Error::InvalidConfig(
                "posterior was fitted with a different kernel than the prior".into(),
            ));
        }
        self.domain.check_dim(model.design().best_point())?;
        let best = model.design().best_value();
        let sigma = params.sigma();
        let (x, value) = self.search(model, |m| ei_from_moments(best, sigma, m));
        let duplicate = model
            .design()
            .points()
            .iter()
            .any(|p| model.spec().scaled_sup_dist(p, &x) < DUPLICATE_TOL);
        if !(value > 0.0) || duplicate {
            return Ok(self.domain.sample_uniform(rng));
        }
        Ok(x)
    }

    /// Minimizer of the posterior mean over the same candidate scheme,
    /// together with the range of the mean over the candidates.
    pub fn minimize_mean(&mut self, model: &Posterior) -> Result<(Point, f64)> {
        self.domain.check_dim(model.design().best_point())?;
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        let (x, _) = self.search(model, |m| {
            lo = lo.min(m.mean);
            hi = hi.max(m.mean);
            -m.mean
        });
        Ok((x, hi - lo))
    }

    fn projection(&mut self, model: &Posterior) -> usize {
        self.tick += 1;
        let idx = match self.projections.iter().position(|p| p.matches(model)) {
            Some(i) => i,
            None => {
                if self.projections.len() >= MAX_PROJECTIONS {
                    let oldest = (0..self.projections.len())
                        .min_by_key(|&i| self.projections[i].last_used)
                        .unwrap_or(0);
                    self.projections.swap_remove(oldest);
                }
                self.projections.push(Projection::new(
                    model.spec().clone(),
                    model.jitter(),
                    self.candidates.len(),
                ));
                self.projections.len() - 1
            }
        };
        let candidates = &self.candidates;
        let proj = &mut self.projections[idx];
        proj.sync(model, candidates);
        proj.last_used = self.tick;
        idx
    }

    /// Maximize `score(moments)` over candidates, midpoints and refinements.
    /// Returns the point and its score; ties keep the earliest point.
    fn search(&mut self, model: &Posterior, mut score: impl FnMut(Moments) -> f64) -> (Point, f64) {
        let idx = self.projection(model);
        let proj = &self.projections[idx];
        let mut scored: Vec<(Point, f64)> = Vec::with_capacity(self.candidates.len() + 8);
        let mut fixed_scores = Vec::with_capacity(self.candidates.len());
        for c in 0..self.candidates.len() {
            fixed_scores.push(score(model.moments_from_projection(proj.ww[c], proj.w1[c], proj.wz[c])));
        }
        for (c, s) in self.candidates.iter().zip(fixed_scores) {
            scored.push((c.clone(), s));
        }
        for mid in self.midpoints(model) {
            let s = score(model.moments_unchecked(&mid));
            scored.push((mid, s));
        }

        let mut best = 0;
        for (i, (_, s)) in scored.iter().enumerate() {
            if *s > scored[best].1 {
                best = i;
            }
        }
        let mut order: Vec<usize> = (0..scored.len()).filter(|&i| scored[i].1.is_finite()).collect();
        order.sort_by(|&a, &b| scored[b].1.total_cmp(&scored[a].1).then(a.cmp(&b)));
        order.truncate(REFINE_TOP);

        let (mut best_x, mut best_s) = scored[best].clone();
        let half_width: Vec<f64> = (0..self.domain.dim())
            .map(|k| {
                self.domain.width(k) * (self.candidates.len() as f64).powf(-1.0 / self.domain.dim() as f64)
            })
            .collect();
        let starts: Vec<Point> = order.iter().map(|&i| scored[i].0.clone()).collect();
        for start in starts {
            let (x, s) = self.refine(model, start, &half_width, &mut score);
            if s > best_s {
                best_x = x;
                best_s = s;
            }
        }
        (best_x, best_s)
    }

    /// Midpoints between the incumbent and its nearest design neighbour in
    /// each axis direction.
    fn midpoints(&self, model: &Posterior) -> Vec<Point> {
        let design = model.design();
        let b = self.domain.to_unit(design.best_point());
        let d = self.domain.dim();
        let mut nearest: Vec<Option<(f64, usize)>> = vec![None; 2 * d];
        for (i, p) in design.points().iter().enumerate() {
            if i == design.best_index() {
                continue;
            }
            let u = self.domain.to_unit(p);
            let (mut axis, mut gap) = (0, 0.0);
            let mut dist2 = 0.0;
            for k in 0..d {
                let diff = u[k] - b[k];
                dist2 += diff * diff;
                if diff.abs() > gap {
                    gap = diff.abs();
                    axis = k;
                }
            }
            let slot = 2 * axis + usize::from(u[axis] > b[axis]);
            if nearest[slot].is_none_or(|(best, _)| dist2 < best) {
                nearest[slot] = Some((dist2, i));
            }
        }
        let best = design.best_point();
        nearest
            .into_iter()
            .flatten()
            .map(|(_, i)| {
                let p = &design.points()[i];
                best.iter().zip(p).map(|(a, c)| 0.5 * (a + c)).collect()
            })
            .collect()
    }

    /// One sweep of golden-section search along each coordinate.
    fn refine(
        &self,
        model: &Posterior,
        start: Point,
        half_width: &[f64],
        score: &mut impl FnMut(Moments) -> f64,
    ) -> (Point, f64) {
        const INV_PHI: f64 = 0.618_033_988_749_894_9;
        let mut x = start;
        let mut fx = score(model.moments_unchecked(&x));
        let mut probe = x.clone();
        for k in 0..x.len() {
            let lo = self.domain.lower()[k];
            let hi = self.domain.upper()[k];
            let mut a = (x[k] - half_width[k]).max(lo);
            let mut b = (x[k] + half_width[k]).min(hi);
            let tol = GOLDEN_TOL * self.domain.width(k);
            probe.copy_from_slice(&x);
            let mut eval = |t: f64, probe: &mut Point| {
                probe[k] = t;
                score(model.moments_unchecked(probe))
            };
            let mut c = b - INV_PHI * (b - a);
            let mut e = a + INV_PHI * (b - a);
            let mut fc = eval(c, &mut probe);
            let mut fe = eval(e, &mut probe);
            let mut iter = 0;
            while b - a > tol && iter < GOLDEN_MAX_ITER {
                if fc > fe {
                    b = e;
                    e = c;
                    fe = fc;
                    c = b - INV_PHI * (b - a);
                    fc = eval(c, &mut probe);
                } else {
                    a = c;
                    c = e;
                    fc = fe;
                    e = a + INV_PHI * (b - a);
                    fe = eval(e, &mut probe);
                }
                iter += 1;
            }
            for t in [0.5 * (a + b), a, b] {
                let ft = eval(t, &mut probe);
                if ft > fx {
                    fx = ft;
                    x[k] = t;
                }
            }
        }
        (x, fx)
    }
}
