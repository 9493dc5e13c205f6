//! Packed lower-triangular Cholesky factor that grows one row at a time.
//!
//! Row `i` holds `L[i][0..=i]`. Appending a row costs one forward
//! substitution, so building an `n × n` factor row by row is the ordinary
//! row-oriented Cholesky algorithm, and extending an existing factor by one
//! design point is `O(n²)`.

/// Pivots at or below this value count as a failed factorization.
const MIN_PIVOT: f64 = 1e-15;

#[derive(Clone, Debug, PartialEq)]
pub(crate) struct Factor {
    data: Vec<f64>,
    n: usize,
    jitter: f64,
}

impl Factor {
    pub(crate) fn new(jitter: f64) -> Self {
        Factor {
            data: Vec::new(),
            n: 0,
            jitter,
        }
    }

    pub(crate) fn jitter(&self) -> f64 {
        self.jitter
    }

    #[inline]
    pub(crate) fn row(&self, i: usize) -> &[f64] {
        let start = i * (i + 1) / 2;
        &self.data[start..start + i + 1]
    }

    #[inline]
    pub(crate) fn diag(&self, i: usize) -> f64 {
        self.data[i * (i + 1) / 2 + i]
    }

    /// Append the row for a new point with correlations `cross` against the
    /// existing points and prior variance `self_corr` (1 for a correlation
    /// kernel). Returns `false` and leaves the factor untouched when the new
    /// pivot is not positive.
    pub(crate) fn push(&mut self, cross: &[f64], self_corr: f64) -> bool {
        debug_assert_eq!(cross.len(), self.n);
        let l = self.solve_lower(cross);
        let pivot_sq = self_corr + self.jitter - l.iter().map(|v| v * v).sum::<f64>();
        if !(pivot_sq > MIN_PIVOT) || !pivot_sq.is_finite() {
            return false;
        }
        self.data.extend_from_slice(&l);
        self.data.push(pivot_sq.sqrt());
        self.n += 1;
        true
    }

    /// Solve `L y = b`.
    pub(crate) fn solve_lower(&self, b: &[f64]) -> Vec<f64> {
        let n = b.len().min(self.n);
        let mut y = Vec::with_capacity(n);
        for i in 0..n {
            let row = self.row(i);
            let mut acc = b[i];
            for (lij, yj) in row[..i].iter().zip(&y) {
                acc -= lij * yj;
            }
            y.push(acc / row[i]);
        }
        y
    }

    /// Extend a forward-substitution result `y` (with `L y = b` on the first
    /// `y.len()` rows) by the entry for the next row, given `b_next`.
    pub(crate) fn extend_solution(&self, y: &mut Vec<f64>, b_next: f64) {
        let i = y.len();
        let row = self.row(i);
        let mut acc = b_next;
        for (lij, yj) in row[..i].iter().zip(y.iter()) {
            acc -= lij * yj;
        }
        y.push(acc / row[i]);
    }

    /// Solve `Lᵀ x = y` in place.
    pub(crate) fn solve_upper_in_place(&self, x: &mut [f64]) {
        for i in (0..self.n).rev() {
            let row = self.row(i);
            x[i] /= row[i];
            let xi = x[i];
            for (xk, lik) in x[..i].iter_mut().zip(&row[..i]) {
                *xk -= lik * xi;
            }
        }
    }

    /// `log det (L Lᵀ)`.
    pub(crate) fn log_det(&self) -> f64 {
        2.0 * (0..self.n).map(|i| self.diag(i).ln()).sum::<f64>()
    }
}
