//! Log conventions and Gaussian tail helpers.
//!
//! `log⁺ x = max(ln x, 1)` and `llog⁺ x = max(ln log⁺ x, 1)`. The `_ln`
//! variants take `ln x` so that astronomically large arguments never have
//! to be materialized.

use core::f64::consts::{PI, SQRT_2};

#[inline]
pub fn log_plus(x: f64) -> f64 {
    log_plus_ln(libm::log(x))
}

#[inline]
pub fn llog_plus(x: f64) -> f64 {
    llog_plus_ln(libm::log(x))
}

#[inline]
pub fn log_plus_ln(lx: f64) -> f64 {
    if lx > 1.0 {
        lx
    } else {
        1.0
    }
}

#[inline]
pub fn llog_plus_ln(lx: f64) -> f64 {
    let l = libm::log(log_plus_ln(lx));
    if l > 1.0 {
        l
    } else {
        1.0
    }
}

/// Standard normal density.
#[inline]
pub fn normal_pdf(z: f64) -> f64 {
    libm::exp(-0.5 * z * z) / libm::sqrt(2.0 * PI)
}

/// Upper tail `P(Z > z)` of the standard normal.
#[inline]
pub fn normal_sf(z: f64) -> f64 {
    0.5 * libm::erfc(z / SQRT_2)
}

/// Standard normal CDF.
#[inline]
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / SQRT_2)
}

/// `ln P(Z > z)`, finite far beyond the underflow point of `normal_sf`.
pub fn ln_normal_sf(z: f64) -> f64 {
    if z < 37.0 {
        return libm::log(normal_sf(z));
    }
    let z2 = z * z;
    let series = 1.0 - 1.0 / z2 + 3.0 / (z2 * z2) - 15.0 / (z2 * z2 * z2);
    -0.5 * z2 - libm::log(z) - 0.5 * libm::log(2.0 * PI) + libm::log(series)
}

/// `φ(z)/Φ̄(z)`, the Gaussian hazard rate.
pub fn normal_hazard(z: f64) -> f64 {
    if z < 37.0 {
        return normal_pdf(z) / normal_sf(z);
    }
    libm::exp(-0.5 * z * z - 0.5 * libm::log(2.0 * PI) - ln_normal_sf(z))
}

/// `ln(e^a + e^b)` without overflow.
#[inline]
pub fn ln_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + libm::log1p(libm::exp(lo - hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn log_clamps() {
        assert_eq!(log_plus(1.0), 1.0);
        assert_eq!(log_plus(2.0), 1.0);
        assert_relative_eq!(log_plus(100.0), 100f64.ln(), max_relative = 1e-15);
        assert_eq!(llog_plus(10.0), 1.0);
        assert_relative_eq!(llog_plus(100.0), 100f64.ln().ln(), max_relative = 1e-15);
        let x = (core::f64::consts::E * 2.0).exp().exp();
        assert_relative_eq!(llog_plus(x), 2.0 * core::f64::consts::E, max_relative = 1e-12);
    }

    #[test]
    fn normal_tail_reference_values() {
        // Tabulated: Φ̄(1.96) = 0.024997895148220435, Φ̄(5) = 2.866515718791933e-7.
        assert_relative_eq!(normal_sf(1.96), 0.024997895148220435, max_relative = 1e-12);
        assert_relative_eq!(normal_sf(5.0), 2.866515718791933e-7, max_relative = 1e-12);
        assert_relative_eq!(normal_cdf(0.0), 0.5, max_relative = 1e-15);
    }

    #[test]
    fn ln_tail_is_continuous_across_the_switch() {
        let below = ln_normal_sf(36.999_999);
        let above = ln_normal_sf(37.0);
        assert!((below - above).abs() < 1e-4, "{below} vs {above}");
        assert!(ln_normal_sf(1e3).is_finite());
        let h = normal_hazard(40.0);
        assert!((h / 40.0 - 1.0).abs() < 1e-3);
    }

    #[test]
    fn ln_add_exp_matches_direct() {
        assert_relative_eq!(
            ln_add_exp(1.0, 2.0),
            (1f64.exp() + 2f64.exp()).ln(),
            max_relative = 1e-14
        );
        assert_eq!(ln_add_exp(f64::NEG_INFINITY, 3.0), 3.0);
    }
}
