//! Flat-mean Gaussian-process conditioning (ordinary kriging).
//!
//! With `V = (K_θ(x_i − x_j))`, `v = (K_θ(x − x_i))` and observations `z`:
//!
//! ```text
//! μ̂    = 1ᵀV⁻¹z / 1ᵀV⁻¹1
//! f̂(x) = μ̂ + vᵀV⁻¹(z − μ̂1)
//! s²(x) = 1 − vᵀV⁻¹v + (1 − 1ᵀV⁻¹v)² / 1ᵀV⁻¹1
//! R̂²   = (z − μ̂1)ᵀV⁻¹(z − μ̂1)
//! ```
//!
//! Everything is expressed through the Cholesky factor `V = LLᵀ` and the two
//! forward solves `L⁻¹1`, `L⁻¹z`, which only grow when a point is appended.

use std::sync::atomic::{AtomicUsize, Ordering};

use crate::domain::{Domain, Point};
use crate::error::{Error, Result};
use crate::kernel::{KernelSpec, DUPLICATE_TOL};
use crate::linalg::Factor;

/// Diagonal jitter added when the plain correlation matrix fails to factor.
pub const JITTER: f64 = 1e-10;

/// Variance round-off below this is counted as a diagnostic.
const NEGATIVE_VARIANCE_WARN: f64 = -1e-8;

/// Observed pairs `(x_i, z_i)` and the index of the best (lowest) value.
#[derive(Clone, Debug, PartialEq)]
pub struct DesignSet {
    points: Vec<Point>,
    values: Vec<f64>,
    best_index: usize,
}

impl DesignSet {
    pub fn new(points: Vec<Point>, values: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyDesign);
        }
        if points.len() != values.len() {
            return Err(Error::InvalidDesign(format!(
                "{} points but {} values",
                points.len(),
                values.len()
            )));
        }
        let d = points[0].len();
        if d == 0 {
            return Err(Error::InvalidDesign("zero-dimensional point".into()));
        }
        if let Some(p) = points.iter().find(|p| p.len() != d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: p.len(),
            });
        }
        if values.iter().any(|z| !z.is_finite()) || points.iter().flatten().any(|v| !v.is_finite())
        {
            return Err(Error::InvalidDesign("non-finite coordinate or value".into()));
        }
        let best_index = argmin_first(&values);
        Ok(DesignSet {
            points,
            values,
            best_index,
        })
    }

    /// A design with a single observation.
    pub fn single(x: Point, z: f64) -> Result<Self> {
        Self::new(vec![x], vec![z])
    }

    /// Append an observation; ties keep the earlier best index.
    pub fn push(&mut self, x: Point, z: f64) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: x.len(),
            });
        }
        if !z.is_finite() || x.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidDesign("non-finite coordinate or value".into()));
        }
        if z < self.values[self.best_index] {
            self.best_index = self.values.len();
        }
        self.points.push(x);
        self.values.push(z);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points[0].len()
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn best_index(&self) -> usize {
        self.best_index
    }

    /// `z*_n`.
    pub fn best_value(&self) -> f64 {
        self.values[self.best_index]
    }

    pub fn best_point(&self) -> &[f64] {
        &self.points[self.best_index]
    }

    /// Whether every observation is identical.
    pub fn is_constant(&self) -> bool {
        self.values.iter().all(|z| *z == self.values[0])
    }

    pub fn within(&self, domain: &Domain) -> bool {
        self.points.iter().all(|p| domain.contains(p))
    }

    /// A copy with every value transformed by `f`.
    pub fn map_values(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(self.points.clone(), self.values.iter().map(|z| f(*z)).collect())
    }

    /// The first `n` observations.
    pub fn prefix(&self, n: usize) -> Result<Self> {
        Self::new(self.points[..n].to_vec(), self.values[..n].to_vec())
    }
}

fn argmin_first(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, z) in values.iter().enumerate().skip(1) {
        if *z < values[best] {
            best = i;
        }
    }
    best
}

/// Posterior mean and variance at a point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Moments {
    pub mean: f64,
    /// `s²`, clamped at zero.
    pub variance: f64,
}

impl Moments {
    pub fn sd(&self) -> f64 {
        self.variance.sqrt()
    }
}

/// A fitted flat-mean GP posterior. Immutable once built; [`Posterior::extend`]
/// consumes the model and returns the conditioned-on-one-more-point version.
#[derive(Debug)]
pub struct Posterior {
    spec: KernelSpec,
    design: DesignSet,
    factor: Factor,
    u1: Vec<f64>,
    uz: Vec<f64>,
    a11: f64,
    mu_hat: f64,
    resid: Vec<f64>,
    weights: Vec<f64>,
    rss: f64,
    negative_variance: AtomicUsize,
}

impl Clone for Posterior {
    fn clone(&self) -> Self {
        Posterior {
            spec: self.spec.clone(),
            design: self.design.clone(),
            factor: self.factor.clone(),
            u1: self.u1.clone(),
            uz: self.uz.clone(),
            a11: self.a11,
            mu_hat: self.mu_hat,
            resid: self.resid.clone(),
            weights: self.weights.clone(),
            rss: self.rss,
            negative_variance: AtomicUsize::new(self.negative_variance.load(Ordering::Relaxed)),
        }
    }
}

impl Posterior {
    /// Condition on `design` under the correlation kernel `spec`.
    pub fn fit(spec: KernelSpec, design: DesignSet) -> Result<Self> {
        spec.check_dim(design.dim())?;
        if let Some((first, second)) = spec.find_duplicate(design.points()) {
            return Err(Error::DuplicatePoints { first, second });
        }
        let factor = build_factor(&spec, design.points(), 0.0)
            .or_else(|| build_factor(&spec, design.points(), JITTER))
            .ok_or(Error::SingularDesign)?;
        Ok(Self::from_factor(spec, design, factor))
    }

    fn from_factor(spec: KernelSpec, design: DesignSet, factor: Factor) -> Self {
        let n = design.len();
        let u1 = factor.solve_lower(&vec![1.0; n]);
        let uz = factor.solve_lower(design.values());
        let mut model = Posterior {
            spec,
            design,
            factor,
            u1,
            uz,
            a11: 0.0,
            mu_hat: 0.0,
            resid: Vec::new(),
            weights: Vec::new(),
            rss: 0.0,
            negative_variance: AtomicUsize::new(0),
        };
        model.refresh();
        model
    }

    fn refresh(&mut self) {
        self.a11 = dot(&self.u1, &self.u1);
        self.mu_hat = dot(&self.u1, &self.uz) / self.a11;
        self.resid = self
            .uz
            .iter()
            .zip(&self.u1)
            .map(|(z, o)| z - self.mu_hat * o)
            .collect();
        self.rss = dot(&self.resid, &self.resid);
        let mut w = self.resid.clone();
        self.factor.solve_upper_in_place(&mut w);
        self.weights = w;
    }

    /// Condition on one more observation in `O(n²)`.
    ///
    /// Falls back to a jittered refit if the plain factor cannot absorb the
    /// new point.
    pub fn extend(mut self, x: Point, z: f64) -> Result<Self> {
        self.spec.check_dim(x.len())?;
        if let Some(i) = self
            .design
            .points()
            .iter()
            .position(|p| self.spec.scaled_sup_dist(p, &x) < DUPLICATE_TOL)
        {
            return Err(Error::DuplicatePoints {
                first: i,
                second: self.design.len(),
            });
        }
        let cross = self.spec.cross_vec(self.design.points(), &x);
        self.design.push(x, z)?;
        if self.factor.push(&cross, 1.0) {
            let n = self.design.len();
            self.factor.extend_solution(&mut self.u1, 1.0);
            self.factor.extend_solution(&mut self.uz, self.design.values()[n - 1]);
            self.refresh();
            return Ok(self);
        }
        if self.factor.jitter() == 0.0 {
            let factor =
                build_factor(&self.spec, self.design.points(), JITTER).ok_or(Error::SingularDesign)?;
            return Ok(Self::from_factor(self.spec, self.design, factor));
        }
        Err(Error::SingularDesign)
    }

    pub fn spec(&self) -> &KernelSpec {
        &self.spec
    }

    pub fn design(&self) -> &DesignSet {
        &self.design
    }

    pub fn len(&self) -> usize {
        self.design.len()
    }

    pub fn is_empty(&self) -> bool {
        self.design.is_empty()
    }

    /// `μ̂_n`.
    pub fn mu_hat(&self) -> f64 {
        self.mu_hat
    }

    /// `V⁻¹(z − μ̂1)`.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `R̂²_n`, the reduced sum of squares.
    pub fn reduced_ss(&self) -> f64 {
        self.rss
    }

    /// Diagonal jitter in use (0 unless the plain matrix failed to factor).
    pub fn jitter(&self) -> f64 {
        self.factor.jitter()
    }

    pub fn log_det(&self) -> f64 {
        self.factor.log_det()
    }

    /// `−n log R̂² − log det V`, up to additive constants.
    pub fn concentrated_log_likelihood(&self) -> f64 {
        -(self.len() as f64) * self.rss.ln() - self.log_det()
    }

    /// Number of variance evaluations whose round-off fell below `−1e−8`.
    pub fn negative_variance_count(&self) -> usize {
        self.negative_variance.load(Ordering::Relaxed)
    }

    /// `f̂_n(x; θ)`.
    pub fn predict_mean(&self, x: &[f64]) -> Result<f64> {
        self.spec.check_dim(x.len())?;
        Ok(self.mean_unchecked(x))
    }

    /// `s_n(x; θ)`.
    pub fn predict_sd(&self, x: &[f64]) -> Result<f64> {
        self.spec.check_dim(x.len())?;
        Ok(self.moments_unchecked(x).sd())
    }

    pub fn predict(&self, x: &[f64]) -> Result<Moments> {
        self.spec.check_dim(x.len())?;
        Ok(self.moments_unchecked(x))
    }

    pub(crate) fn mean_unchecked(&self, x: &[f64]) -> f64 {
        let mut acc = self.mu_hat;
        for (p, w) in self.design.points().iter().zip(&self.weights) {
            acc += w * self.spec.corr(p, x);
        }
        acc
    }

    pub(crate) fn moments_unchecked(&self, x: &[f64]) -> Moments {
        let v = self.spec.cross_vec(self.design.points(), x);
        let w = self.factor.solve_lower(&v);
        self.moments_from_projection(dot(&w, &w), dot(&self.u1, &w), dot(&self.uz, &w))
    }

    /// Moments from `‖w‖²`, `(L⁻¹1)·w` and `(L⁻¹z)·w`, where `w = L⁻¹v`.
    #[inline]
    pub(crate) fn moments_from_projection(&self, ww: f64, w1: f64, wz: f64) -> Moments {
        let mean = self.mu_hat + wz - self.mu_hat * w1;
        let one_minus = 1.0 - w1;
        let raw = 1.0 - ww + one_minus * one_minus / self.a11;
        if raw < NEGATIVE_VARIANCE_WARN {
            self.negative_variance.fetch_add(1, Ordering::Relaxed);
        }
        Moments {
            mean,
            variance: raw.max(0.0),
        }
    }

    pub(crate) fn factor(&self) -> &Factor {
        &self.factor
    }

    pub(crate) fn u1(&self) -> &[f64] {
        &self.u1
    }

    pub(crate) fn uz(&self) -> &[f64] {
        &self.uz
    }
}

fn build_factor(spec: &KernelSpec, points: &[Point], jitter: f64) -> Option<Factor> {
    let mut factor = Factor::new(jitter);
    for (j, p) in points.iter().enumerate() {
        let cross = spec.cross_vec(&points[..j], p);
        if !factor.push(&cross, 1.0) {
            return None;
        }
    }
    Some(factor)
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
