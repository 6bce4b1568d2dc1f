//! Standard normal helpers used across the crate.
//!
//! Densities are only ever needed as log-densities or as ratios, so nothing
//! here returns a raw pdf.

use statrs::distribution::{ContinuousCDF, Normal};
use std::f64::consts::{PI, SQRT_2};

fn erfc(x: f64) -> f64 {
    libm::erfc(x)
}

const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;

/// Log-density of `N(mean, var)` at `x`.
pub fn log_pdf(x: f64, mean: f64, var: f64) -> f64 {
    debug_assert!(var > 0.0);
    let d = x - mean;
    -HALF_LN_2PI - 0.5 * var.ln() - d * d / (2.0 * var)
}

/// Upper tail `1 - Φ(z)`, computed through `erfc` so it keeps relative
/// precision far into the tail.
pub fn upper_tail(z: f64) -> f64 {
    0.5 * erfc(z / SQRT_2)
}

/// Standard normal CDF.
pub fn cdf(z: f64) -> f64 {
    upper_tail(-z)
}

/// Two-sided p-value `2·(1 - Φ(|z|))`.
pub fn two_sided_p(z: f64) -> f64 {
    erfc(z.abs() / SQRT_2).min(1.0)
}

/// Standard normal quantile `Φ⁻¹(p)` for `p ∈ (0, 1)`.
pub fn quantile(p: f64) -> f64 {
    let std = Normal::new(0.0, 1.0).expect("standard normal parameters are valid");
    let mut x = std.inverse_cdf(p);
    // statrs gets within ~1e-9; Newton steps against the erfc-based CDF
    // bring it to full precision.
    for _ in 0..2 {
        if !x.is_finite() {
            break;
        }
        let density = (-0.5 * x * x).exp() / (2.0 * PI).sqrt();
        if density <= 0.0 {
            break;
        }
        x -= (cdf(x) - p) / density;
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Composite Simpson integration of the standard normal density on [0, z].
    fn simpson_half_mass(z: f64) -> f64 {
        let n = 20_000;
        let h = z / n as f64;
        let f = |x: f64| (-0.5 * x * x).exp() / (2.0 * PI).sqrt();
        let mut acc = f(0.0) + f(z);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * f(i as f64 * h);
        }
        acc * h / 3.0
    }

    #[test]
    fn two_sided_p_matches_quadrature() {
        for &z in &[0.1, 0.5, 1.0, 1.96, 2.5, 3.3] {
            let oracle = 1.0 - 2.0 * simpson_half_mass(z);
            assert!((two_sided_p(z) - oracle).abs() < 1e-12, "z={z}");
        }
    }

    #[test]
    fn two_sided_p_reference_points() {
        assert_eq!(two_sided_p(0.0), 1.0);
        assert!((two_sided_p(1.96) - 0.049_995_790_296_440_84).abs() < 1e-12);
        assert_eq!(two_sided_p(-1.96), two_sided_p(1.96));
    }

    #[test]
    fn quantile_inverts_cdf() {
        for &p in &[1e-10, 1e-4, 0.025, 0.3, 0.5, 0.8, 0.975, 1.0 - 1e-9] {
            let x = quantile(p);
            assert!((cdf(x) - p).abs() <= 1e-13 * p.max(1e-3), "p={p}");
        }
        assert!((quantile(0.975) - 1.959_963_984_540_054).abs() < 1e-12);
    }

    #[test]
    fn log_pdf_matches_direct_density() {
        let direct = (-(1.3f64 - 0.2).powi(2) / (2.0 * 0.5)).exp() / (2.0 * PI * 0.5).sqrt();
        assert!((log_pdf(1.3, 0.2, 0.5) - direct.ln()).abs() < 1e-14);
    }
}
