//! Small order statistics and the Mann–Kendall trend test.

/// Linear-interpolation quantile (`q` in `[0, 1]`) of unsorted data.
pub fn quantile(values: &[f64], q: f64) -> f64 {
    assert!(!values.is_empty(), "quantile of empty data");
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let pos = q.clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    v[lo] + (v[hi] - v[lo]) * (pos - lo as f64)
}

pub fn median(values: &[f64]) -> f64 {
    quantile(values, 0.5)
}

/// Mann–Kendall statistic and exact one-sided p-values.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MannKendall {
    /// `S = Σ_{i<j} sign(x_j − x_i)`.
    pub s: i64,
    /// `P(S ≥ s)` under the no-trend null.
    pub p_increasing: f64,
    /// `P(S ≤ s)` under the no-trend null.
    pub p_decreasing: f64,
}

/// Exact Mann–Kendall test for a series without ties.
///
/// Under the null every ordering is equally likely, and `S = N − 2I` where
/// `I` counts inversions and `N = n(n−1)/2`; the inversion counts follow the
/// Mahonian distribution, tabulated by dynamic programming.
pub fn mann_kendall(series: &[f64]) -> MannKendall {
    let n = series.len();
    let mut s = 0i64;
    for i in 0..n {
        for j in i + 1..n {
            s += match series[j].partial_cmp(&series[i]) {
                Some(std::cmp::Ordering::Greater) => 1,
                Some(std::cmp::Ordering::Less) => -1,
                _ => 0,
            };
        }
    }
    let pairs = n * n.saturating_sub(1) / 2;
    // counts[k] = number of permutations with k inversions
    let mut counts = vec![1.0f64];
    for m in 1..=n {
        let mut next = vec![0.0; counts.len() + m - 1];
        for (k, c) in counts.iter().enumerate() {
            for extra in 0..m {
                next[k + extra] += c;
            }
        }
        counts = next;
    }
    let total: f64 = counts.iter().sum();
    // S ≥ s  ⇔  I ≤ (N − s)/2
    let mut p_inc = 0.0;
    let mut p_dec = 0.0;
    for (k, c) in counts.iter().enumerate() {
        let sk = pairs as i64 - 2 * k as i64;
        if sk >= s {
            p_inc += c;
        }
        if sk <= s {
            p_dec += c;
        }
    }
    MannKendall {
        s,
        p_increasing: p_inc / total,
        p_decreasing: p_dec / total,
    }
}
