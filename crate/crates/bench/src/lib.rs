//! Shared fixtures for the benchmarks in `benches/`.

use eiconv::{DesignSet, Domain, KernelSpec, MaternNu, Point, Posterior};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn kernel(d: usize) -> KernelSpec {
    KernelSpec::matern(MaternNu::FiveHalves, vec![0.2; d]).expect("valid kernel")
}

/// `n` uniform points on `[0, 1]^d` with uniform values in `[−1, 1]`.
pub fn random_design(n: usize, d: usize, seed: u64) -> DesignSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let domain = Domain::unit(d);
    let points: Vec<Point> = (0..n).map(|_| domain.sample_uniform(&mut rng)).collect();
    let values = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    DesignSet::new(points, values).expect("distinct random points")
}

pub fn fitted(n: usize, d: usize, seed: u64) -> Posterior {
    Posterior::fit(kernel(d), random_design(n, d, seed)).expect("factorizable design")
}
