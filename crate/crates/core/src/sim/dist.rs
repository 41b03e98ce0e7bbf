//! Standard-normal and chi-squared(1) distribution helpers.
//!
//! The chi-squared(1) quantile uses the identity F^{-1}(u) = Phi^{-1}((1+u)/2)^2
//! (a chi-squared(1) variable is a squared standard normal), which avoids an
//! incomplete-gamma inverter on the main path.

use std::sync::LazyLock;

use statrs::distribution::{Continuous, ContinuousCDF, Normal};

static STD_NORMAL: LazyLock<Normal> =
    LazyLock::new(|| Normal::new(0.0, 1.0).expect("standard normal"));

/// Phi^{-1}(p), p in (0, 1).
pub fn normal_quantile(p: f64) -> f64 {
    STD_NORMAL.inverse_cdf(p)
}

/// Standard normal density.
pub fn normal_pdf(x: f64) -> f64 {
    STD_NORMAL.pdf(x)
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    STD_NORMAL.cdf(x)
}

/// Chi-squared(1) quantile via the squared-normal identity.
pub fn chi_sq1_quantile(p: f64) -> f64 {
    let z = normal_quantile((1.0 + p) / 2.0);
    z * z
}

/// Chi-squared(1) density f(x) = exp(-x/2) / sqrt(2 pi x), x > 0.
pub fn chi_sq1_pdf(x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    (-x / 2.0).exp() / (2.0 * std::f64::consts::PI * x).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Independent chi-squared(1) inverse CDF: bisection on the regularized
    /// lower incomplete gamma P(1/2, x/2), which is the chi-squared(1) CDF.
    fn chi_sq1_quantile_bisection(p: f64) -> f64 {
        let cdf = |x: f64| statrs::function::gamma::gamma_lr(0.5, x / 2.0);
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        while cdf(hi) < p {
            hi *= 2.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if cdf(mid) < p {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn chi_sq1_quantile_matches_incomplete_gamma_bisection() {
        for p in [0.01, 0.1, 0.25, 0.3, 0.5, 0.7, 0.75, 0.9, 0.99] {
            let identity = chi_sq1_quantile(p);
            let oracle = chi_sq1_quantile_bisection(p);
            assert!(
                (identity - oracle).abs() < 1e-9 * (1.0 + oracle),
                "p={p}: {identity} vs {oracle}"
            );
        }
        // frozen oracle value: median of chi-squared(1)
        assert!((chi_sq1_quantile(0.5) - 0.45493642311957116).abs() < 1e-9);
    }

    #[test]
    fn normal_quantile_basics() {
        assert!(normal_quantile(0.5).abs() < 1e-15);
        assert!((normal_quantile(0.975) - 1.959963984540054).abs() < 1e-9);
        assert!((normal_quantile(0.3) + normal_quantile(0.7)).abs() < 1e-12);
    }

    #[test]
    fn chi_sq1_pdf_matches_finite_difference_of_cdf() {
        let cdf = |x: f64| statrs::function::gamma::gamma_lr(0.5, x / 2.0);
        for x in [0.1, 0.45, 1.0, 2.5] {
            let h = 1e-6;
            let fd = (cdf(x + h) - cdf(x - h)) / (2.0 * h);
            assert!((chi_sq1_pdf(x) - fd).abs() < 1e-6, "x={x}");
        }
    }
}
