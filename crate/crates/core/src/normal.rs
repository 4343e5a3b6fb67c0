//! Standard normal kernels and log-domain helpers.
//!
//! `Phi` is evaluated through the complementary error function so that the
//! lower tail keeps full relative precision; `ln_std_normal_cdf` switches to
//! the asymptotic Mills-ratio series once `erfc` would underflow.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

/// `1 / sqrt(2 pi)`
pub const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// `ln(sqrt(2 pi))`
pub const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Below this argument `erfc(-u / sqrt 2)` is close to underflow.
const LN_CDF_ASYMPTOTIC_CUTOFF: f64 = -35.0;

#[inline]
pub fn std_normal_pdf(u: f64) -> f64 {
    FRAC_1_SQRT_2PI * (-0.5 * u * u).exp()
}

#[inline]
pub fn ln_std_normal_pdf(u: f64) -> f64 {
    -0.5 * u * u - LN_SQRT_2PI
}

/// Standard normal CDF. Accepts `±inf`.
#[inline]
pub fn std_normal_cdf(u: f64) -> f64 {
    0.5 * libm::erfc(-u * FRAC_1_SQRT_2)
}

/// `ln Phi(u)`, accurate in both tails.
pub fn ln_std_normal_cdf(u: f64) -> f64 {
    if u == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if u > 0.0 {
        // Phi(u) = 1 - Phi(-u), and Phi(-u) is small
        return log1p(-std_normal_cdf(-u));
    }
    if u > LN_CDF_ASYMPTOTIC_CUTOFF {
        return std_normal_cdf(u).ln();
    }
    // Phi(u) ~ phi(u)/|u| * (1 - 1/u^2 + 3/u^4 - 15/u^6 + 105/u^8)
    let z = 1.0 / (u * u);
    let series = 1.0 - z * (1.0 - z * (3.0 - z * (15.0 - 105.0 * z)));
    ln_std_normal_pdf(u) - (-u).ln() + series.ln()
}

#[inline]
pub fn log1p(x: f64) -> f64 {
    x.ln_1p()
}

#[inline]
pub fn expm1(x: f64) -> f64 {
    x.exp_m1()
}

/// `ln(e^x + e^y)` without overflow.
pub fn log_add_exp(x: f64, y: f64) -> f64 {
    let (hi, lo) = if x >= y { (x, y) } else { (y, x) };
    if hi == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if hi == f64::INFINITY {
        return f64::INFINITY;
    }
    hi + log1p((lo - hi).exp())
}

/// `ln(sum_i e^{x_i})`; `-inf` for an empty slice.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi.is_infinite() {
        return hi;
    }
    let s: f64 = xs.iter().map(|&x| (x - hi).exp()).sum();
    hi + s.ln()
}

/// `sqrt(2 pi)`, occasionally handy in tests.
#[inline]
pub fn sqrt_2pi() -> f64 {
    (2.0 * PI).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pdf_values() {
        assert!((std_normal_pdf(0.0) - 0.398_942_280_4).abs() < 1e-10);
        assert_eq!(std_normal_pdf(1.0), std_normal_pdf(-1.0));
        assert!((std_normal_pdf(2.0) - 0.053_990_966_51).abs() < 1e-10);
        assert!((FRAC_1_SQRT_2PI - 1.0 / sqrt_2pi()).abs() < 1e-16);
        assert!((LN_SQRT_2PI - sqrt_2pi().ln()).abs() < 1e-15);
    }

    #[test]
    fn cdf_values() {
        assert_eq!(std_normal_cdf(0.0), 0.5);
        assert!((std_normal_cdf(0.5) - 0.691_462_461_3).abs() < 1e-10);
        assert!((std_normal_cdf(-0.18513) - 0.426_563_535_85).abs() < 1e-10);
        assert_eq!(std_normal_cdf(f64::NEG_INFINITY), 0.0);
        assert_eq!(std_normal_cdf(f64::INFINITY), 1.0);
    }

    #[test]
    fn cdf_matches_high_precision_references() {
        // mpmath.ncdf at 50 digits
        let refs = [
            (-8.0, 6.220_960_574_271_784e-16),
            (-3.0, 1.349_898_031_630_094_6e-3),
            (-1.0, 0.158_655_253_931_457_05),
            (1.0, 0.841_344_746_068_542_9),
            (2.5, 0.993_790_334_674_224),
        ];
        for (u, p) in refs {
            assert!((std_normal_cdf(u) - p).abs() < 1e-15, "u = {u}");
            assert!(((std_normal_cdf(u) - p) / p).abs() < 1e-13, "u = {u}");
        }
    }

    #[test]
    fn cdf_is_monotone() {
        let mut prev = 0.0;
        for i in -400..=400 {
            let p = std_normal_cdf(i as f64 * 0.025);
            assert!(p >= prev);
            prev = p;
        }
    }

    #[test]
    fn ln_cdf_tails() {
        for u in [-30.0, -5.0, -1.0, 0.0, 0.7, 4.0] {
            let direct = std_normal_cdf(u).ln();
            assert!((ln_std_normal_cdf(u) - direct).abs() < 1e-12 * direct.abs().max(1.0));
        }
        // continuity across the asymptotic cutoff
        let a = ln_std_normal_cdf(-35.0 + 1e-9);
        let b = ln_std_normal_cdf(-35.0 - 1e-9);
        assert!(((a - b) / a).abs() < 1e-9);
        // deep tail stays finite where Phi itself underflows
        let deep = ln_std_normal_cdf(-60.0);
        assert!(deep.is_finite());
        assert!((deep - (-1_805.013_560_680_567)).abs() < 1e-9);
        // ln Phi(8) is tiny but not zero
        assert!(ln_std_normal_cdf(8.0) < 0.0);
    }

    #[test]
    fn log_sum_exp_helpers() {
        assert!((log_add_exp(0.0, 0.0) - 2f64.ln()).abs() < 1e-15);
        assert_eq!(log_add_exp(1000.0, f64::NEG_INFINITY), 1000.0);
        assert!((log_add_exp(1000.0, 1000.0) - (1000.0 + 2f64.ln())).abs() < 1e-12);
        assert_eq!(log_sum_exp(&[]), f64::NEG_INFINITY);
        assert!((log_sum_exp(&[1.0, 2.0, 3.0]) - (1f64.exp() + 2f64.exp() + 3f64.exp()).ln()).abs() < 1e-14);
        assert!((expm1(1e-10) - (1e-10 + 5e-21)).abs() < 1e-26);
        assert!((log1p(1e-10) - (1e-10 - 5e-21)).abs() < 1e-26);
    }
}
