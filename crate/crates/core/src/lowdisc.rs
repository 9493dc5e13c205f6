//! Seeded, Owen-scrambled Sobol points on the unit cube.

use crate::domain::{Domain, Point};

const BLOCK: u64 = 1 << 16;

/// An infinite scrambled Sobol sequence in `[0, 1)^d`.
///
/// Backed by `sobol_burley`, which supports 2^16 points per seed; later
/// points continue with a freshly derived seed, so the first 2^16 points
/// keep full stratification.
#[derive(Clone, Debug)]
pub struct ScrambledSobol {
    dim: usize,
    seed: u32,
}

impl ScrambledSobol {
    pub fn new(dim: usize, seed: u32) -> Self {
        assert!(
            dim >= 1 && dim <= sobol_burley::NUM_DIMENSIONS as usize,
            "unsupported Sobol dimension {dim}"
        );
        ScrambledSobol { dim, seed }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// The `index`-th point of the sequence.
    pub fn point(&self, index: u64) -> Point {
        let block = index / BLOCK;
        let offset = (index % BLOCK) as u32;
        let seed = if block == 0 {
            self.seed
        } else {
            mix(self.seed, block)
        };
        (0..self.dim as u32)
            .map(|k| f64::from(sobol_burley::sample(offset, k, seed)))
            .collect()
    }

    /// The `index`-th point mapped onto `domain`.
    pub fn point_in(&self, domain: &Domain, index: u64) -> Point {
        domain.from_unit(&self.point(index))
    }

    /// The first `n` points mapped onto `domain`.
    pub fn take_in(&self, domain: &Domain, n: usize) -> Vec<Point> {
        (0..n as u64).map(|i| self.point_in(domain, i)).collect()
    }
}

fn mix(seed: u32, block: u64) -> u32 {
    // splitmix64 finaliser
    let mut z = (u64::from(seed) << 32 ^ block).wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    (z ^ (z >> 31)) as u32
}
