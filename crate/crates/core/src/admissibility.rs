//! Admissibility interval of the shift class `Y[2] + d`.

use serde::{Deserialize, Serialize};

use crate::estimators::mree_shift;
use crate::normal::{ln_std_normal_cdf, std_normal_cdf};
use crate::types::{CovarianceSpec, LinexParams, ThetaStar};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdmissibilityBounds {
    pub d0: f64,
    pub d1: f64,
    pub a: LinexParams,
    pub cov: CovarianceSpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShiftClass {
    AdmissibleInClass,
    DominatedByD0,
    DominatedByD1,
}

impl ShiftClass {
    pub fn as_str(&self) -> &'static str {
        match self {
            ShiftClass::AdmissibleInClass => "admissible_in_class",
            ShiftClass::DominatedByD0 => "dominated_by_d0",
            ShiftClass::DominatedByD1 => "dominated_by_d1",
        }
    }
}

impl std::fmt::Display for ShiftClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// `Phi((a s_xy + t)/sqrt(2 s_xx)) + Phi((a s_xy - t)/sqrt(2 s_xx))`
pub fn h_a(theta_x: f64, a: LinexParams, cov: &CovarianceSpec) -> f64 {
    let r = (2.0 * cov.sigma_xx()).sqrt();
    let c = a.a() * cov.sigma_xy();
    std_normal_cdf((c + theta_x) / r) + std_normal_cdf((c - theta_x) / r)
}

/// Shift minimizing the risk of `Y[2] + d` at `theta_star`.
pub fn psi(theta_star: &ThetaStar, a: LinexParams, cov: &CovarianceSpec) -> f64 {
    mree_shift(a, cov) - h_a(theta_star.theta_x, a, cov).ln() / a.a()
}

/// `psi` at `theta_x = 0` in log form: `-a s_yy/2 - (1/a)[ln 2 + ln Phi(a s_xy / sqrt(2 s_xx))]`.
fn psi_at_zero(a: LinexParams, cov: &CovarianceSpec) -> f64 {
    let u = a.a() * cov.sigma_xy() / (2.0 * cov.sigma_xx()).sqrt();
    mree_shift(a, cov) - (std::f64::consts::LN_2 + ln_std_normal_cdf(u)) / a.a()
}

pub fn bounds(a: LinexParams, cov: &CovarianceSpec) -> AdmissibilityBounds {
    let base = mree_shift(a, cov);
    let sxy = cov.sigma_xy();
    // min/max only guard against rounding when a s_xy is tiny
    let d0 = if sxy > 0.0 { psi_at_zero(a, cov).min(base) } else { base };
    let d1 = if sxy >= 0.0 { base } else { psi_at_zero(a, cov).max(base) };
    AdmissibilityBounds { d0, d1, a, cov: *cov }
}

impl AdmissibilityBounds {
    pub fn classify(&self, d: f64) -> ShiftClass {
        if d < self.d0 {
            ShiftClass::DominatedByD0
        } else if d > self.d1 {
            ShiftClass::DominatedByD1
        } else {
            ShiftClass::AdmissibleInClass
        }
    }

    /// The shift that dominates `d`, if any.
    pub fn dominating_shift(&self, d: f64) -> Option<f64> {
        match self.classify(d) {
            ShiftClass::AdmissibleInClass => None,
            ShiftClass::DominatedByD0 => Some(self.d0),
            ShiftClass::DominatedByD1 => Some(self.d1),
        }
    }
}

pub fn classify(d: f64, a: LinexParams, cov: &CovarianceSpec) -> ShiftClass {
    bounds(a, cov).classify(d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn a(v: f64) -> LinexParams {
        LinexParams::new(v).unwrap()
    }

    fn ts(x: f64, y: f64) -> ThetaStar {
        ThetaStar::new(x, y).unwrap()
    }

    #[test]
    fn h_a_values() {
        let cov = CovarianceSpec::new(2.0, 1.0, 2.0).unwrap();
        assert!((h_a(1.0, a(1.0), &cov) - 1.341_344_746_068_543).abs() < 1e-12);
        assert!((h_a(0.0, a(1.0), &cov) - 2.0 * std_normal_cdf(0.5)).abs() < 1e-15);
        assert!((h_a(1e3, a(1.0), &cov) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn psi_values() {
        let cov = CovarianceSpec::new(2.0, 1.0, 2.0).unwrap();
        assert!((psi(&ts(1.0, 0.0), a(1.0), &cov) - -1.293_672_652_593_5).abs() < 1e-12);
        let flat = CovarianceSpec::new(2.0, 0.0, 2.0).unwrap();
        assert_eq!(psi(&ts(0.0, 0.0), a(1.0), &flat), -1.0);
        assert!((psi(&ts(50.0, 0.0), a(1.0), &flat) - -1.0).abs() < 1e-15);
    }

    #[test]
    fn bounds_values() {
        let flat = CovarianceSpec::new(1.0, 0.0, 2.0).unwrap();
        let b = bounds(a(1.0), &flat);
        assert_eq!((b.d0, b.d1), (-1.0, -1.0));

        let cov = CovarianceSpec::new(2.0, 1.0, 2.0).unwrap();
        let b = bounds(a(1.0), &cov);
        assert!((b.d0 - -1.324_200_765_271_3).abs() < 1e-12);
        assert_eq!(b.d1, -1.0);

        let l = (2.0 * std_normal_cdf(0.5)).ln();
        let neg = CovarianceSpec::new(2.0, -1.0, 2.0).unwrap();
        let b = bounds(a(-1.0), &neg);
        assert_eq!(b.d0, 1.0);
        assert!((b.d1 - (1.0 + l)).abs() < 1e-12);
    }

    #[test]
    fn classify_examples() {
        let flat = CovarianceSpec::new(1.0, 0.0, 2.0).unwrap();
        assert_eq!(classify(0.0, a(1.0), &flat), ShiftClass::DominatedByD1);
        assert_eq!(classify(-1.0, a(1.0), &flat), ShiftClass::AdmissibleInClass);
        let cov = CovarianceSpec::new(2.0, 1.0, 2.0).unwrap();
        assert_eq!(classify(-1.2, a(1.0), &cov), ShiftClass::AdmissibleInClass);
        assert_eq!(classify(-2.0, a(1.0), &cov), ShiftClass::DominatedByD0);
        assert_eq!(bounds(a(1.0), &cov).dominating_shift(0.0), Some(-1.0));
    }

    proptest! {
        #[test]
        fn mree_always_admissible(av in -4.0..4.0f64, sxx in 0.1..10.0f64, syy in 0.1..10.0f64, rho in -1.0..=1.0f64) {
            prop_assume!(av.abs() > 1e-3);
            let cov = CovarianceSpec::from_correlation(sxx, syy, rho).unwrap();
            prop_assert_eq!(classify(mree_shift(a(av), &cov), a(av), &cov), ShiftClass::AdmissibleInClass);
        }

        #[test]
        fn psi_sandwiched_and_monotone(av in -3.0..3.0f64, sxx in 0.2..5.0f64, syy in 0.2..5.0f64, rho in -1.0..=1.0f64,
                                       ty in 0.0..5.0f64) {
            prop_assume!(av.abs() > 1e-2);
            let cov = CovarianceSpec::from_correlation(sxx, syy, rho).unwrap();
            let b = bounds(a(av), &cov);
            prop_assert!(b.d0 <= b.d1);
            let tol = 1e-12 * (1.0 + b.d0.abs() + b.d1.abs());
            let mut prev = psi(&ts(0.0, ty), a(av), &cov);
            for i in 1..200 {
                let p = psi(&ts(i as f64 * 0.05, ty), a(av), &cov);
                prop_assert!(p >= b.d0 - tol && p <= b.d1 + tol);
                if cov.sigma_xy() > 0.0 {
                    prop_assert!(p >= prev - tol);
                } else if cov.sigma_xy() < 0.0 {
                    prop_assert!(p <= prev + tol);
                } else {
                    prop_assert!((p - prev).abs() <= tol);
                }
                prev = p;
            }
            // no dependence on theta_y
            prop_assert_eq!(psi(&ts(0.7, ty), a(av), &cov), psi(&ts(0.7, 0.0), a(av), &cov));
        }
    }
}
