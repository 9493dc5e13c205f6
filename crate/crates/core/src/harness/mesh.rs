//! Mesh norm `h_n = sup_x min_i ‖x − x_i‖` over the box.
//!
//! In one dimension the supremum is computed exactly from the sorted gaps.
//! In higher dimensions it is the maximum over a regular grid of nodes,
//! which can fall short of the true supremum by at most half a grid
//! diagonal.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain::{Domain, Point};
use crate::error::{Error, Result};
use crate::harness::stats::{mann_kendall, median, quantile, MannKendall};

/// Per-step mesh norms of a design sequence.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeshStats {
    pub h: Vec<f64>,
}

impl MeshStats {
    /// `h_1, …, h_n` for the prefixes of `points`; `resolution` is the
    /// number of grid nodes per axis used when `d ≥ 2`.
    pub fn compute(points: &[Point], domain: &Domain, resolution: usize) -> Result<Self> {
        check_points(points, domain)?;
        if domain.dim() == 1 {
            let mut sorted: Vec<f64> = Vec::with_capacity(points.len());
            let h = points
                .iter()
                .map(|p| {
                    let pos = sorted.partition_point(|v| *v < p[0]);
                    sorted.insert(pos, p[0]);
                    exact_1d(&sorted, domain)
                })
                .collect();
            return Ok(MeshStats { h });
        }
        let nodes = grid_nodes(domain, resolution)?;
        let mut nearest = vec![f64::INFINITY; nodes.len()];
        let h = points
            .iter()
            .map(|p| {
                let mut worst = 0.0f64;
                for (node, best) in nodes.iter().zip(nearest.iter_mut()) {
                    let d2 = dist2(node, p);
                    if d2 < *best {
                        *best = d2;
                    }
                    worst = worst.max(*best);
                }
                worst.sqrt()
            })
            .collect();
        Ok(MeshStats { h })
    }

    pub fn last(&self) -> Option<f64> {
        self.h.last().copied()
    }
}

/// `h_n` of `points` over `domain`.
pub fn mesh_norm(points: &[Point], domain: &Domain, resolution: usize) -> Result<f64> {
    check_points(points, domain)?;
    if domain.dim() == 1 {
        let mut sorted: Vec<f64> = points.iter().map(|p| p[0]).collect();
        sorted.sort_by(f64::total_cmp);
        return Ok(exact_1d(&sorted, domain));
    }
    let nodes = grid_nodes(domain, resolution)?;
    let buckets = Buckets::new(points, domain);
    Ok(nodes
        .iter()
        .map(|node| buckets.nearest2(node, points))
        .fold(0.0, f64::max)
        .sqrt())
}

fn check_points(points: &[Point], domain: &Domain) -> Result<()> {
    if points.is_empty() {
        return Err(Error::EmptyDesign);
    }
    for p in points {
        domain.check_dim(p)?;
    }
    Ok(())
}

fn exact_1d(sorted: &[f64], domain: &Domain) -> f64 {
    let (lo, hi) = (domain.lower()[0], domain.upper()[0]);
    let mut h = (sorted[0] - lo).max(hi - sorted[sorted.len() - 1]);
    for w in sorted.windows(2) {
        h = h.max(0.5 * (w[1] - w[0]));
    }
    h
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn grid_nodes(domain: &Domain, resolution: usize) -> Result<Vec<Point>> {
    if resolution < 2 {
        return Err(Error::InvalidConfig("mesh resolution must be >= 2".into()));
    }
    let d = domain.dim();
    let total = resolution
        .checked_pow(d as u32)
        .filter(|t| *t <= 50_000_000)
        .ok_or_else(|| Error::InvalidConfig("mesh grid too large".into()))?;
    let mut idx = vec![0usize; d];
    let mut nodes = Vec::with_capacity(total);
    for _ in 0..total {
        let u: Vec<f64> = idx.iter().map(|&i| i as f64 / (resolution - 1) as f64).collect();
        nodes.push(domain.from_unit(&u));
        for slot in idx.iter_mut() {
            *slot += 1;
            if *slot < resolution {
                break;
            }
            *slot = 0;
        }
    }
    Ok(nodes)
}

/// Uniform cell grid over the box for nearest-neighbour queries.
struct Buckets {
    lower: Vec<f64>,
    cell_width: Vec<f64>,
    cells: usize,
    members: Vec<Vec<usize>>,
}

impl Buckets {
    fn new(points: &[Point], domain: &Domain) -> Self {
        let d = domain.dim();
        let cells = ((points.len() as f64).powf(1.0 / d as f64).round() as usize).max(1);
        let cell_width: Vec<f64> = (0..d).map(|k| domain.width(k) / cells as f64).collect();
        let mut b = Buckets {
            lower: domain.lower().to_vec(),
            cell_width,
            cells,
            members: vec![Vec::new(); cells.pow(d as u32)],
        };
        for (i, p) in points.iter().enumerate() {
            let slot = b.flat(&b.cell_of(p));
            b.members[slot].push(i);
        }
        b
    }

    fn cell_of(&self, x: &[f64]) -> Vec<isize> {
        x.iter()
            .enumerate()
            .map(|(k, v)| {
                let c = ((v - self.lower[k]) / self.cell_width[k]).floor() as isize;
                c.clamp(0, self.cells as isize - 1)
            })
            .collect()
    }

    fn flat(&self, cell: &[isize]) -> usize {
        cell.iter().rev().fold(0, |acc, &c| acc * self.cells + c as usize)
    }

    /// Squared distance from `x` to its nearest point, scanning Chebyshev
    /// rings of cells until no unscanned cell can hold a closer point.
    fn nearest2(&self, x: &[f64], points: &[Point]) -> f64 {
        let d = x.len();
        let home = self.cell_of(x);
        let w_min = self.cell_width.iter().copied().fold(f64::INFINITY, f64::min);
        let mut best = f64::INFINITY;
        let max_ring = self.cells as isize;
        let mut offset = vec![0isize; d];
        for r in 0..=max_ring {
            // enumerate offsets in [−r, r]^d on the ring's surface
            let side = (2 * r + 1) as usize;
            let count = side.pow(d as u32);
            for code in 0..count {
                let mut rest = code;
                let mut on_surface = false;
                for o in offset.iter_mut() {
                    *o = (rest % side) as isize - r;
                    rest /= side;
                    on_surface |= o.abs() == r;
                }
                if !on_surface {
                    continue;
                }
                let cell: Vec<isize> = home.iter().zip(&offset).map(|(h, o)| h + o).collect();
                if cell.iter().any(|&c| c < 0 || c >= self.cells as isize) {
                    continue;
                }
                for &i in &self.members[self.flat(&cell)] {
                    best = best.min(dist2(x, &points[i]));
                }
            }
            let reach = r as f64 * w_min;
            if best <= reach * reach {
                break;
            }
        }
        best
    }
}

/// One rung of the random-design mesh experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeshRow {
    pub n: usize,
    pub median_h: f64,
    pub p95_h: f64,
    /// 95th percentile of `h_n (n / log n)^{1/d}`.
    pub p95_normalized: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeshExperiment {
    pub d: usize,
    pub seeds: usize,
    pub rows: Vec<MeshRow>,
    /// Trend test on `p95_normalized` across the rungs.
    pub trend_s: i64,
    pub trend_p_increasing: f64,
    /// Whether every seed's `h_n` was non-increasing along the rungs.
    pub monotone: bool,
}

impl MeshExperiment {
    pub fn trend(&self) -> MannKendall {
        mann_kendall(&self.rows.iter().map(|r| r.p95_normalized).collect::<Vec<_>>())
    }
}

/// Mesh norms of i.i.d. uniform points on `[0, 1]^d` at the prefix sizes
/// `ns`, over `n_seeds` independent streams derived from `seed`.
pub fn random_mesh_experiment(
    ns: &[usize],
    n_seeds: usize,
    d: usize,
    resolution: usize,
    seed: u64,
) -> Result<MeshExperiment> {
    if ns.is_empty() || ns.iter().any(|&n| n < 2) || n_seeds == 0 || d == 0 {
        return Err(Error::InvalidConfig(
            "mesh experiment needs sizes >= 2, at least one seed and d >= 1".into(),
        ));
    }
    let mut ns = ns.to_vec();
    ns.sort_unstable();
    ns.dedup();
    let n_max = *ns.last().unwrap_or(&2);
    let domain = Domain::unit(d);
    let per_seed: Vec<Vec<f64>> = (0..n_seeds as u64)
        .into_par_iter()
        .map(|s| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(s.wrapping_mul(0x9e37_79b9)));
            let points: Vec<Point> = (0..n_max).map(|_| domain.sample_uniform(&mut rng)).collect();
            ns.iter()
                .map(|&n| mesh_norm(&points[..n], &domain, resolution))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    let monotone = per_seed.iter().all(|h| h.windows(2).all(|w| w[1] <= w[0]));
    let rows: Vec<MeshRow> = ns
        .iter()
        .enumerate()
        .map(|(j, &n)| {
            let hs: Vec<f64> = per_seed.iter().map(|h| h[j]).collect();
            let scale = (n as f64 / (n as f64).ln()).powf(1.0 / d as f64);
            let normalized: Vec<f64> = hs.iter().map(|h| h * scale).collect();
            MeshRow {
                n,
                median_h: median(&hs),
                p95_h: quantile(&hs, 0.95),
                p95_normalized: quantile(&normalized, 0.95),
            }
        })
        .collect();
    let trend = mann_kendall(&rows.iter().map(|r| r.p95_normalized).collect::<Vec<_>>());
    Ok(MeshExperiment {
        d,
        seeds: n_seeds,
        rows,
        trend_s: trend.s,
        trend_p_increasing: trend.p_increasing,
        monotone,
    })
}
