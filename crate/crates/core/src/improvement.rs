//! Truncation of equivariant estimators `Y[2] + phi(T1, T2)` to the band
//! `[phi_I, phi_S]`, and the fifteen closed-form special cases.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{self, mree_shift, n4_pools, phi_n3, BaseEstimator, EstimatorSpec};
use crate::oracles::{clip_value, phi_bounds};
use crate::selection::SelectionSummary;
use crate::types::{CovarianceSpec, LinexParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Truncation {
    None,
    ClippedToPhiInf,
    ClippedToPhiSup,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImprovementOutcome {
    pub value: f64,
    pub truncated: Truncation,
    pub base_phi: f64,
}

/// `phi(t1, t2)` of a base estimator.
pub fn base_phi_of(base: BaseEstimator, s: &SelectionSummary, a: LinexParams, cov: &CovarianceSpec) -> f64 {
    match base {
        BaseEstimator::N1 => 0.0,
        BaseEstimator::N2 => mree_shift(a, cov),
        BaseEstimator::N3 => phi_n3(s.t1, s.t2, a, cov),
        BaseEstimator::N4 { c } => {
            if n4_pools(s.t1, c, cov) {
                0.5 * s.t2
            } else {
                0.0
            }
        }
    }
}

/// `estimate - Y[2]` for any spec of the form `Y[2] + phi(T1, T2)`.
pub fn base_phi(spec: &EstimatorSpec, s: &SelectionSummary, a: LinexParams, cov: &CovarianceSpec) -> Result<f64> {
    match *spec {
        EstimatorSpec::Shift { d } => Ok(d),
        EstimatorSpec::Bayes { .. } => Err(Error::NotEquivariant(spec.to_string())),
        EstimatorSpec::Improved { .. } => Err(Error::InvalidParameter(
            "an improved estimator cannot be improved again".into(),
        )),
        _ => Ok(base_phi_of(spec.as_base().expect("equivariant base"), s, a, cov)),
    }
}

/// Clips the base estimator's `phi` to `[phi_I, phi_S]`.
pub fn improve(base: BaseEstimator, s: &SelectionSummary, a: LinexParams, cov: &CovarianceSpec) -> ImprovementOutcome {
    let phi = base_phi_of(base, s, a, cov);
    let (lo, hi) = phi_bounds(s.t1, s.t2, a, cov);
    let truncated = if phi <= lo {
        Truncation::ClippedToPhiInf
    } else if phi >= hi {
        Truncation::ClippedToPhiSup
    } else {
        Truncation::None
    };
    let value = match truncated {
        Truncation::None => estimators::evaluate(&base.into(), s, a, cov).expect("base estimators are infallible"),
        _ => midpoint_rule(s, a, cov),
    };
    ImprovementOutcome {
        value,
        truncated,
        base_phi: phi,
    }
}

/// `(Y[1] + Y[2]) / 2 - a sigma_yy / 4`, equal to `Y[2] + clip_value`.
#[inline]
fn midpoint_rule(s: &SelectionSummary, a: LinexParams, cov: &CovarianceSpec) -> f64 {
    0.5 * (s.y_sel + s.y_other) - 0.25 * a.a() * cov.sigma_yy()
}

/// One of the fifteen closed-form improved estimators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ImprovedCase(u8);

impl ImprovedCase {
    pub const ALL: [ImprovedCase; 15] = {
        let mut out = [ImprovedCase(1); 15];
        let mut i = 0;
        while i < 15 {
            out[i] = ImprovedCase(i as u8 + 1);
            i += 1;
        }
        out
    };

    pub fn new(id: u8) -> Result<Self> {
        if (1..=15).contains(&id) {
            Ok(ImprovedCase(id))
        } else {
            Err(Error::InvalidParameter(format!("improved case must be in 1..=15, got {id}")))
        }
    }

    pub fn id(&self) -> u8 {
        self.0
    }

    /// Base estimator, with `c` supplying the hybrid threshold.
    pub fn base(&self, c: f64) -> BaseEstimator {
        match self.0 {
            1..=4 => BaseEstimator::N1,
            5 | 6 => BaseEstimator::N2,
            7..=10 => BaseEstimator::N3,
            _ => BaseEstimator::N4 { c },
        }
    }

    /// Label such as `N3^I2`.
    pub fn label(&self) -> String {
        let (n, k) = match self.0 {
            1..=4 => (1, self.0),
            5 | 6 => (2, self.0 - 4),
            7..=10 => (3, self.0 - 6),
            _ => (4, self.0 - 10),
        };
        format!("N{n}^I{k}")
    }

    pub fn contains(&self, a: LinexParams, rho: f64) -> bool {
        let (ap, an) = (a.a() > 0.0, a.a() < 0.0);
        let (rp, rn, rz) = (rho > 0.0, rho < 0.0, rho == 0.0);
        match self.0 {
            1 | 7 | 11 => ap && rp,
            2 | 14 => an && rn,
            3 => (ap && rn) || (an && rp),
            4 | 15 => an && rz,
            5 | 12 => ap && rn,
            6 => (ap && rp) || (an && rn),
            8 | 13 => an && rp,
            9 => rn,
            10 => rz,
            _ => unreachable!(),
        }
    }
}

impl std::fmt::Display for ImprovedCase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.label())
    }
}

/// The case whose region holds `(a, rho)` for this base, if any.
pub fn applicable_case(base: BaseEstimator, a: LinexParams, rho: f64) -> Option<ImprovedCase> {
    let range = match base {
        BaseEstimator::N1 => 1..=4,
        BaseEstimator::N2 => 5..=6,
        BaseEstimator::N3 => 7..=10,
        BaseEstimator::N4 { .. } => 11..=15,
    };
    range.map(ImprovedCase).find(|c| c.contains(a, rho))
}

/// Literal transcription of a case's piecewise rule. Test fixture only.
pub fn named_case_rule(case: ImprovedCase, s: &SelectionSummary, a: LinexParams, cov: &CovarianceSpec, c: f64) -> Result<f64> {
    let rho = cov.rho();
    if !case.contains(a, rho) {
        return Err(Error::OutsideCaseRegion { case: case.0, a: a.a(), rho });
    }
    let (t1, t2) = (s.t1, s.t2);
    let av = a.a();
    let xi = cov.xi();
    let syy = cov.sigma_yy();
    let h = av * syy / 2.0;
    let b = xi * rho * t1 - av * syy / 2.0 * (1.0 - rho * rho);
    let r = rho * t2 / xi;
    let cut = -c * (2.0 * cov.sigma_xx()).sqrt();
    let m = (s.y_other + s.y_sel) / 2.0 - av * syy / 4.0;
    let phi3 = phi_n3(t1, t2, a, cov);
    let v = clip_value(t2, a, cov);

    let pick = |hit: bool, base: f64| if hit { m } else { base };
    let n1 = s.y_sel;
    let n2 = s.y_sel - h;
    let n3 = s.y_sel + phi3;
    let n4 = estimators::est_n4(s, c, cov);

    Ok(match case.0 {
        1 => pick(t1 > r && h >= t2 && t2 > b, n1),
        2 => pick(t1 < r && h <= t2 && t2 < b, n1),
        3 => pick((t1 < r && h <= t2 && t2 < b) || (t1 > r && h >= t2 && t2 > b), n1),
        4 => pick(h <= t2 && t2 < -h, n1),
        5 => pick(t1 < r && -h <= t2 && t2 < b, n2),
        6 => pick((t1 < r && -h <= t2 && t2 < b) || (t1 > r && -h >= t2 && t2 > b), n2),
        7 => pick(
            (t1 < r && t2 < b && phi3 <= v) || (t1 > r && t2 > b && phi3 >= v),
            n3,
        ),
        8 => pick(t1 < r && t2 < b && phi3 <= v, n3),
        9 => {
            let q = xi * t1 / rho;
            pick(
                (t2 < q.min(b) && phi3 <= v) || (q.max(b) < t2 && phi3 >= v),
                n3,
            )
        }
        10 => pick(t1 < 0.0 && t2 < -h && phi3 <= v, n3),
        11 => pick(
            (t1 > cut.max(r) && t2 > b) || (r < t1 && t1 <= cut && h >= t2 && t2 > b),
            n4,
        ),
        12 => pick(
            (t1 > cut.max(r) && t2 > b)
                || (t1 < cut.min(r) && h <= t2 && t2 < b)
                || (r < t1 && t1 <= cut && h >= t2 && t2 > b),
            n4,
        ),
        13 => pick(
            (cut < t1 && t1 < r && t2 < b)
                || (t1 < cut.min(r) && h <= t2 && t2 < b)
                || (r < t1 && t1 <= cut && h >= t2 && t2 > b),
            n4,
        ),
        14 => pick(
            (cut < t1 && t1 < r && t2 < b) || (t1 < cut.min(r) && h <= t2 && t2 < b),
            n4,
        ),
        15 => pick((t1 > cut && t2 < -h) || (t1 <= cut && h <= t2 && t2 < -h), n4),
        _ => unreachable!(),
    })
}
