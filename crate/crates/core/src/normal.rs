//! Standard normal density, distribution function and the integrated tail
//! `τ(x) = xΦ(x) + φ(x)`.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

const LEFT_TAIL: f64 = -8.0;

/// Standard normal density.
#[inline]
pub fn pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// Standard normal distribution function, via `erfc` for relative accuracy
/// in both tails.
#[inline]
pub fn cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

/// `τ(x) = xΦ(x) + φ(x) = ∫_{-∞}^x Φ(t) dt`.
///
/// For `x < −8` the asymptotic Mills expansion
/// `φ(x)(1/x² − 3/x⁴ + 15/x⁶ − …)` avoids the cancellation in
/// `xΦ(x) + φ(x)`. Positive arguments use `τ(x) = x + τ(−x)`.
pub fn tau(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x > 0.0 {
        return x + tau(-x);
    }
    if x >= LEFT_TAIL {
        return x * cdf(x) + pdf(x);
    }
    let density = pdf(x);
    if density == 0.0 {
        return 0.0;
    }
    let inv_x2 = 1.0 / (x * x);
    let mut term = inv_x2;
    let mut sum = term;
    let mut k = 1.0;
    loop {
        let next = -term * (2.0 * k + 1.0) * inv_x2;
        if next.abs() >= term.abs() || next.abs() < 1e-18 * sum.abs() {
            break;
        }
        sum += next;
        term = next;
        k += 1.0;
    }
    density * sum
}
