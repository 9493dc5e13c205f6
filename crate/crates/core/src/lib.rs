//! Expected-improvement global optimization over a box, built on flat-mean
//! Gaussian-process interpolation.
//!
//! The crate is organised bottom-up:
//!
//! * [`kernel`]: stationary correlation kernels (Matérn half-integer family
//!   and Gaussian) with per-coordinate length-scales.
//! * [`posterior`]: kriging with an unknown constant mean, i.e. the best
//!   linear unbiased predictor, its variance and the reduced sum of squares.
//! * [`acquisition`]: the closed-form expected improvement and a
//!   candidate-plus-refinement maximizer.
//! * [`strategy`]: sequential design strategies (naive fixed design, EI with
//!   fixed, likelihood-estimated and robust-estimated priors, and ε-greedy
//!   wrappers).
//! * [`funcspace`]: test objectives with known ground truth.
//! * [`harness`]: trial driver, regret records, rate fitting and the
//!   convergence / divergence / lower-bound experiments.

pub mod acquisition;
pub mod domain;
pub mod error;
pub mod funcspace;
pub mod harness;
pub mod kernel;
mod linalg;
pub mod lowdisc;
pub mod normal;
pub mod posterior;
pub mod strategy;

pub use acquisition::{expected_improvement, maximize_ei, rho, tau, EiSearch, PriorParams};
pub use domain::{Domain, Point};
pub use error::{Error, Result};
pub use funcspace::{BumpFamily, BumpFunction, CounterexamplePair, Objective, ObjectiveConfig, RkhsSpanFunction};
pub use harness::{run_trial, MeshStats, RegretRecord};
pub use kernel::{KernelFamily, KernelSpec, MaternNu};
pub use posterior::{DesignSet, Posterior};
pub use strategy::{CnRule, StrategyConfig, StrategyState, ThetaBounds, Variant};
