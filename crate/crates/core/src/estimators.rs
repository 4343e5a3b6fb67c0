//! Point estimators of the selected population's Y-mean.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::improvement;
use crate::normal::{ln_std_normal_cdf, log_add_exp, std_normal_cdf};
use crate::selection::SelectionSummary;
use crate::types::{CovarianceSpec, LinexParams};

/// Conjugate prior `N2(mu, m I)` on one population's mean vector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriorSpec {
    pub mu1: f64,
    pub mu2: f64,
    pub m: f64,
}

impl PriorSpec {
    pub fn new(mu1: f64, mu2: f64, m: f64) -> Result<Self> {
        if !(mu1.is_finite() && mu2.is_finite()) {
            return Err(Error::InvalidParameter("prior means must be finite".into()));
        }
        if !(m > 0.0 && m.is_finite()) {
            return Err(Error::InvalidParameter(format!("prior scale m must be positive, got {m}")));
        }
        Ok(PriorSpec { mu1, mu2, m })
    }
}

/// Estimators of the form `Y[2] + phi(T1, T2)` that the truncation operator accepts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum BaseEstimator {
    N1,
    N2,
    N3,
    N4 { c: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum EstimatorSpec {
    N1,
    N2,
    N3,
    /// hybrid estimator with threshold `c`
    N4 { c: f64 },
    Bayes { prior: PriorSpec },
    Shift { d: f64 },
    Improved { base: BaseEstimator },
}

impl EstimatorSpec {
    pub fn n4(c: f64) -> Result<Self> {
        check_c(c)?;
        Ok(EstimatorSpec::N4 { c })
    }

    pub fn improved(base: BaseEstimator) -> Self {
        EstimatorSpec::Improved { base }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            EstimatorSpec::N4 { c } | EstimatorSpec::Improved { base: BaseEstimator::N4 { c } } => check_c(c),
            EstimatorSpec::Shift { d } if !d.is_finite() => {
                Err(Error::InvalidParameter(format!("shift d must be finite, got {d}")))
            }
            EstimatorSpec::Bayes { prior } => PriorSpec::new(prior.mu1, prior.mu2, prior.m).map(|_| ()),
            _ => Ok(()),
        }
    }

    /// The base estimator if this spec is equivariant.
    pub fn as_base(&self) -> Option<BaseEstimator> {
        match *self {
            EstimatorSpec::N1 => Some(BaseEstimator::N1),
            EstimatorSpec::N2 => Some(BaseEstimator::N2),
            EstimatorSpec::N3 => Some(BaseEstimator::N3),
            EstimatorSpec::N4 { c } => Some(BaseEstimator::N4 { c }),
            _ => None,
        }
    }
}

impl From<BaseEstimator> for EstimatorSpec {
    fn from(b: BaseEstimator) -> Self {
        match b {
            BaseEstimator::N1 => EstimatorSpec::N1,
            BaseEstimator::N2 => EstimatorSpec::N2,
            BaseEstimator::N3 => EstimatorSpec::N3,
            BaseEstimator::N4 { c } => EstimatorSpec::N4 { c },
        }
    }
}

fn check_c(c: f64) -> Result<()> {
    if c >= 0.0 && c.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("hybrid threshold c must be >= 0, got {c}")))
    }
}

impl fmt::Display for BaseEstimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BaseEstimator::N1 => write!(f, "N1"),
            BaseEstimator::N2 => write!(f, "N2"),
            BaseEstimator::N3 => write!(f, "N3"),
            BaseEstimator::N4 { c } => write!(f, "N4(c={c})"),
        }
    }
}

impl fmt::Display for EstimatorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EstimatorSpec::N1 => write!(f, "N1"),
            EstimatorSpec::N2 => write!(f, "N2"),
            EstimatorSpec::N3 => write!(f, "N3"),
            EstimatorSpec::N4 { c } => write!(f, "N4(c={c})"),
            EstimatorSpec::Bayes { prior } => write!(f, "Bayes(mu=({},{}),m={})", prior.mu1, prior.mu2, prior.m),
            EstimatorSpec::Shift { d } => write!(f, "Shift(d={d})"),
            EstimatorSpec::Improved { base } => write!(f, "{base}^I"),
        }
    }
}

/// `-a sigma_yy / 2`, the shift of the MREE.
///
/// Shared with the admissibility bounds so both sides compare bit-exactly.
#[inline]
pub fn mree_shift(a: LinexParams, cov: &CovarianceSpec) -> f64 {
    -0.5 * a.a() * cov.sigma_yy()
}

#[inline]
pub fn est_n1(s: &SelectionSummary) -> f64 {
    s.y_sel
}

#[inline]
pub fn est_n2(s: &SelectionSummary, a: LinexParams, cov: &CovarianceSpec) -> f64 {
    s.y_sel + mree_shift(a, cov)
}

/// `(1/a) ln[1 + (e^{a t2} - 1) Phi(t1 / sqrt(2 sigma_xx))]`
pub fn phi_n3(t1: f64, t2: f64, a: LinexParams, cov: &CovarianceSpec) -> f64 {
    let a = a.a();
    let u = t1 / (2.0 * cov.sigma_xx()).sqrt();
    let at2 = a * t2;
    if at2 > 30.0 {
        // t2 + (1/a) ln[Phi(u) + Phi(-u) e^{-a t2}]
        t2 + log_add_exp(ln_std_normal_cdf(u), ln_std_normal_cdf(-u) - at2) / a
    } else {
        (at2.exp_m1() * std_normal_cdf(u)).ln_1p() / a
    }
}

#[inline]
pub fn est_n3(s: &SelectionSummary, a: LinexParams, cov: &CovarianceSpec) -> f64 {
    s.y_sel + phi_n3(s.t1, s.t2, a, cov)
}

/// Averages both concomitants when the x-gap is below `c sqrt(2 sigma_xx)`.
#[inline]
pub fn est_n4(s: &SelectionSummary, c: f64, cov: &CovarianceSpec) -> f64 {
    if n4_pools(s.t1, c, cov) {
        0.5 * (s.y_sel + s.y_other)
    } else {
        s.y_sel
    }
}

#[inline]
pub(crate) fn n4_pools(t1: f64, c: f64, cov: &CovarianceSpec) -> bool {
    t1 > -c * (2.0 * cov.sigma_xx()).sqrt()
}

#[inline]
pub fn est_shift(s: &SelectionSummary, d: f64) -> f64 {
    s.y_sel + d
}

/// Posterior mean and variance of the Y-component given one observation `(x, y)`.
pub fn bayes_posterior(x: f64, y: f64, prior: &PriorSpec, cov: &CovarianceSpec) -> Result<(f64, f64)> {
    let det = bayes_det(cov)?;
    let (sxx, sxy, syy) = (cov.sigma_xx(), cov.sigma_xy(), cov.sigma_yy());
    let m = prior.m;
    let denom = m * m + m * sxx + m * syy + det;
    let p = (prior.mu2 * (det + m * syy) + m * y * (m + sxx) + m * sxy * (prior.mu1 - x)) / denom;
    let q = (m * m * syy + m * det) / denom;
    Ok((p, q))
}

fn bayes_det(cov: &CovarianceSpec) -> Result<f64> {
    let det = cov.det();
    if det <= 1e-12 * cov.sigma_xx() * cov.sigma_yy() {
        return Err(Error::SingularCovariance { rho: cov.rho() });
    }
    Ok(det)
}

pub fn est_bayes(s: &SelectionSummary, prior: &PriorSpec, a: LinexParams, cov: &CovarianceSpec) -> Result<f64> {
    let (p, q) = bayes_posterior(s.x_max, s.y_sel, prior, cov)?;
    Ok(p - 0.5 * a.a() * q)
}

/// Posterior LINEX risk of the Bayes estimator; free of the data.
pub fn posterior_risk_constant(prior: &PriorSpec, a: LinexParams, cov: &CovarianceSpec) -> Result<f64> {
    let (_, q) = bayes_posterior(0.0, 0.0, prior, cov)?;
    Ok(0.5 * a.a() * a.a() * q)
}

pub fn evaluate(spec: &EstimatorSpec, s: &SelectionSummary, a: LinexParams, cov: &CovarianceSpec) -> Result<f64> {
    Ok(match *spec {
        EstimatorSpec::N1 => est_n1(s),
        EstimatorSpec::N2 => est_n2(s, a, cov),
        EstimatorSpec::N3 => est_n3(s, a, cov),
        EstimatorSpec::N4 { c } => est_n4(s, c, cov),
        EstimatorSpec::Bayes { prior } => est_bayes(s, &prior, a, cov)?,
        EstimatorSpec::Shift { d } => est_shift(s, d),
        EstimatorSpec::Improved { base } => improvement::improve(base, s, a, cov).value,
    })
}
