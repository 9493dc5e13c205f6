//! Stationary correlation kernels with per-coordinate length-scales.
//!
//! A kernel is an isotropic base correlation `K(r)` with `K(0) = 1`, applied
//! to the rescaled lag `r = ‖(t₁/θ₁, …, t_d/θ_d)‖₂`. The Matérn family is
//! restricted to half-integer smoothness, where the Bessel function reduces
//! to an exponential times a polynomial.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Scaled ∞-norm distance below which two points count as duplicates.
pub const DUPLICATE_TOL: f64 = 1e-10;

/// Supported Matérn smoothness values.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum MaternNu {
    Half,
    ThreeHalves,
    FiveHalves,
    SevenHalves,
}

impl MaternNu {
    pub const ALL: [MaternNu; 4] = [
        MaternNu::Half,
        MaternNu::ThreeHalves,
        MaternNu::FiveHalves,
        MaternNu::SevenHalves,
    ];

    /// `ν = numerator / denominator`; only 1/2, 3/2, 5/2 and 7/2 are accepted.
    pub fn from_ratio(numerator: u32, denominator: u32) -> Result<Self> {
        if denominator == 0 {
            return Err(Error::InvalidKernel("zero denominator in nu".into()));
        }
        // compare as 2ν so that e.g. 6/4 is accepted as 3/2
        let twice = 2 * numerator;
        if twice % denominator != 0 {
            return Err(Error::InvalidKernel(format!(
                "Matérn nu = {numerator}/{denominator} is not a supported half-integer"
            )));
        }
        match twice / denominator {
            1 => Ok(MaternNu::Half),
            3 => Ok(MaternNu::ThreeHalves),
            5 => Ok(MaternNu::FiveHalves),
            7 => Ok(MaternNu::SevenHalves),
            _ => Err(Error::InvalidKernel(format!(
                "Matérn nu = {numerator}/{denominator} is not one of 1/2, 3/2, 5/2, 7/2"
            ))),
        }
    }

    pub fn value(self) -> f64 {
        match self {
            MaternNu::Half => 0.5,
            MaternNu::ThreeHalves => 1.5,
            MaternNu::FiveHalves => 2.5,
            MaternNu::SevenHalves => 3.5,
        }
    }

    fn as_ratio_str(self) -> &'static str {
        match self {
            MaternNu::Half => "1/2",
            MaternNu::ThreeHalves => "3/2",
            MaternNu::FiveHalves => "5/2",
            MaternNu::SevenHalves => "7/2",
        }
    }
}

impl fmt::Display for MaternNu {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_ratio_str())
    }
}

impl FromStr for MaternNu {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some((num, den)) = s.split_once('/') {
            let parse = |v: &str| {
                v.trim()
                    .parse::<u32>()
                    .map_err(|_| Error::InvalidKernel(format!("cannot parse nu from {s:?}")))
            };
            return MaternNu::from_ratio(parse(num)?, parse(den)?);
        }
        let v: f64 = s
            .parse()
            .map_err(|_| Error::InvalidKernel(format!("cannot parse nu from {s:?}")))?;
        MaternNu::ALL
            .into_iter()
            .find(|nu| nu.value() == v)
            .ok_or_else(|| Error::InvalidKernel(format!("Matérn nu = {v} is not supported")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum KernelFamily {
    Matern(MaternNu),
    Gaussian,
}

impl KernelFamily {
    /// Correlation at rescaled distance `r ≥ 0`.
    #[inline]
    pub fn eval(self, r: f64) -> f64 {
        debug_assert!(r >= 0.0);
        match self {
            KernelFamily::Gaussian => (-0.5 * r * r).exp(),
            KernelFamily::Matern(nu) => match nu {
                MaternNu::Half => (-r).exp(),
                MaternNu::ThreeHalves => {
                    let a = 3f64.sqrt() * r;
                    (1.0 + a) * (-a).exp()
                }
                MaternNu::FiveHalves => {
                    let a = 5f64.sqrt() * r;
                    (1.0 + a + a * a / 3.0) * (-a).exp()
                }
                MaternNu::SevenHalves => {
                    let a = 7f64.sqrt() * r;
                    (1.0 + a + 0.4 * a * a + a * a * a / 15.0) * (-a).exp()
                }
            },
        }
    }

    /// Smoothness `ν`; infinite for the Gaussian kernel.
    pub fn nu(self) -> f64 {
        match self {
            KernelFamily::Matern(nu) => nu.value(),
            KernelFamily::Gaussian => f64::INFINITY,
        }
    }

    /// Log-factor exponent `α`: 1/2 for integer Matérn smoothness, else 0.
    pub fn alpha(self) -> f64 {
        match self {
            KernelFamily::Matern(nu) if nu.value().fract() == 0.0 => 0.5,
            _ => 0.0,
        }
    }
}

impl fmt::Display for KernelFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KernelFamily::Matern(nu) => write!(f, "matern-{nu}"),
            KernelFamily::Gaussian => f.write_str("gaussian"),
        }
    }
}

/// A base kernel together with its length-scales `θ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "KernelConfig", into = "KernelConfig")]
pub struct KernelSpec {
    family: KernelFamily,
    theta: Vec<f64>,
    inv_theta: Vec<f64>,
}

/// On-disk form: `{ family = "matern", nu = "5/2", theta = [0.2] }`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct KernelConfig {
    pub family: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nu: Option<String>,
    pub theta: Vec<f64>,
}

impl TryFrom<KernelConfig> for KernelSpec {
    type Error = Error;

    fn try_from(c: KernelConfig) -> Result<Self> {
        let family = match c.family.to_ascii_lowercase().as_str() {
            "gaussian" => KernelFamily::Gaussian,
            "matern" => {
                let nu = c
                    .nu
                    .ok_or_else(|| Error::InvalidKernel("matern kernel requires nu".into()))?;
                KernelFamily::Matern(nu.parse()?)
            }
            other => return Err(Error::InvalidKernel(format!("unknown family {other:?}"))),
        };
        KernelSpec::new(family, c.theta)
    }
}

impl From<KernelSpec> for KernelConfig {
    fn from(s: KernelSpec) -> Self {
        let (family, nu) = match s.family {
            KernelFamily::Gaussian => ("gaussian".to_string(), None),
            KernelFamily::Matern(nu) => ("matern".to_string(), Some(nu.to_string())),
        };
        KernelConfig {
            family,
            nu,
            theta: s.theta,
        }
    }
}

impl KernelSpec {
    pub fn new(family: KernelFamily, theta: Vec<f64>) -> Result<Self> {
        if theta.is_empty() {
            return Err(Error::InvalidKernel("theta must be non-empty".into()));
        }
        if theta.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
            return Err(Error::InvalidKernel(
                "length-scales must be finite and positive".into(),
            ));
        }
        let inv_theta = theta.iter().map(|t| 1.0 / t).collect();
        Ok(KernelSpec {
            family,
            theta,
            inv_theta,
        })
    }

    pub fn matern(nu: MaternNu, theta: Vec<f64>) -> Result<Self> {
        Self::new(KernelFamily::Matern(nu), theta)
    }

    pub fn gaussian(theta: Vec<f64>) -> Result<Self> {
        Self::new(KernelFamily::Gaussian, theta)
    }

    /// Same family with different length-scales.
    pub fn with_theta(&self, theta: Vec<f64>) -> Result<Self> {
        if theta.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: theta.len(),
            });
        }
        Self::new(self.family, theta)
    }

    pub fn family(&self) -> KernelFamily {
        self.family
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn dim(&self) -> usize {
        self.theta.len()
    }

    pub fn nu(&self) -> f64 {
        self.family.nu()
    }

    pub fn alpha(&self) -> f64 {
        self.family.alpha()
    }

    /// Base correlation `K(r)`.
    pub fn eval_base(&self, r: f64) -> f64 {
        self.family.eval(r)
    }

    /// `K_θ(t) = K(‖t / θ‖)`.
    pub fn eval_scaled(&self, t: &[f64]) -> Result<f64> {
        self.check_dim(t.len())?;
        let r2: f64 = t
            .iter()
            .zip(&self.inv_theta)
            .map(|(ti, it)| (ti * it) * (ti * it))
            .sum();
        Ok(self.family.eval(r2.sqrt()))
    }

    /// `K_θ(x − y)` without dimension checks.
    #[inline]
    pub(crate) fn corr(&self, x: &[f64], y: &[f64]) -> f64 {
        let mut r2 = 0.0;
        for ((a, b), it) in x.iter().zip(y).zip(&self.inv_theta) {
            let s = (a - b) * it;
            r2 += s * s;
        }
        self.family.eval(r2.sqrt())
    }

    /// ∞-norm of `(x − y) / θ`.
    #[inline]
    pub(crate) fn scaled_sup_dist(&self, x: &[f64], y: &[f64]) -> f64 {
        x.iter()
            .zip(y)
            .zip(&self.inv_theta)
            .map(|((a, b), it)| ((a - b) * it).abs())
            .fold(0.0, f64::max)
    }

    pub(crate) fn cross_vec(&self, points: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
        points.iter().map(|p| self.corr(p, x)).collect()
    }

    pub(crate) fn check_dim(&self, found: usize) -> Result<()> {
        if found != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found,
            });
        }
        Ok(())
    }

    /// First pair of points closer than [`DUPLICATE_TOL`] after θ-scaling.
    pub(crate) fn find_duplicate(&self, points: &[Vec<f64>]) -> Option<(usize, usize)> {
        for j in 1..points.len() {
            for i in 0..j {
                if self.scaled_sup_dist(&points[i], &points[j]) < DUPLICATE_TOL {
                    return Some((i, j));
                }
            }
        }
        None
    }

    /// Correlation matrix `V = (K_θ(x_i − x_j))`.
    pub fn gram(&self, points: &[Vec<f64>]) -> Result<DMatrix<f64>> {
        if points.is_empty() {
            return Err(Error::EmptyDesign);
        }
        for p in points {
            self.check_dim(p.len())?;
        }
        if let Some((first, second)) = self.find_duplicate(points) {
            return Err(Error::DuplicatePoints { first, second });
        }
        let n = points.len();
        let mut v = DMatrix::identity(n, n);
        for j in 1..n {
            for i in 0..j {
                let k = self.corr(&points[i], &points[j]);
                v[(i, j)] = k;
                v[(j, i)] = k;
            }
        }
        Ok(v)
    }

    /// Cross-correlations `v = (K_θ(x − x_i))`.
    pub fn cross(&self, points: &[Vec<f64>], x: &[f64]) -> Result<DVector<f64>> {
        self.check_dim(x.len())?;
        for p in points {
            self.check_dim(p.len())?;
        }
        Ok(DVector::from_vec(self.cross_vec(points, x)))
    }
}
