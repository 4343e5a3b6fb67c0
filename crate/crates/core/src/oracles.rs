//! Closed-form densities and conditional moments used to check the
//! estimators and to build the truncation bounds.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::loss::linex_of_error;
use crate::normal::{ln_std_normal_pdf, log_add_exp, std_normal_cdf, std_normal_pdf};
use crate::quad::integrate_windows;
use crate::types::{CovarianceSpec, LinexParams, ThetaStar};

/// Relative slack on the strict inequalities that define the bounds.
///
/// With `rho = -1` and equal mean sums, `t1 xi - rho t2` is zero up to
/// rounding; the slack keeps such structural zeros on the boundary.
pub const BOUNDARY_RTOL: f64 = 1e-12;

/// Mixture weights of the two selection branches given `(T1, T2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConditionalWeights {
    /// wrong selection: the population with the smaller means was picked
    pub d1_term: f64,
    pub d2_term: f64,
}

/// Density of `W = Y[2] - theta_y^S` for the shift class.
pub fn w_pdf(w: f64, theta_star: &ThetaStar, cov: &CovarianceSpec) -> f64 {
    let sy = cov.sigma_yy().sqrt();
    let sx = cov.sigma_xx().sqrt();
    let rho = cov.rho();
    let r = (2.0 - rho * rho).sqrt();
    let u = rho * w / sy;
    let v = theta_star.theta_x / sx;
    std_normal_pdf(w / sy) / sy * (std_normal_cdf((u + v) / r) + std_normal_cdf((u - v) / r))
}

/// Risk of `Y[2] + d` by quadrature of the loss against `w_pdf`.
pub fn shift_risk_quadrature(d: f64, theta_star: &ThetaStar, a: LinexParams, cov: &CovarianceSpec) -> Result<f64> {
    let sy = cov.sigma_yy().sqrt();
    // exp(a w) tilts the mass towards a sigma_yy
    let centres = [0.0, a.a() * cov.sigma_yy()];
    let hw = 14.0 * sy;
    linex_of_error(centres[1] + hw + d.abs(), a)?;
    let r = integrate_windows(
        |w| linex_of_error(w + d, a).unwrap_or(f64::INFINITY) * w_pdf(w, theta_star, cov),
        &centres,
        hw,
        1e-13,
        1e-12,
    );
    Ok(r.value)
}

/// Closed form of the same risk: `e^{a d + a^2 s_yy/2} H_a(theta_x) - a (d + E W) - 1`.
pub fn shift_risk_closed_form(d: f64, theta_star: &ThetaStar, a: LinexParams, cov: &CovarianceSpec) -> f64 {
    let av = a.a();
    let h = crate::admissibility::h_a(theta_star.theta_x, a, cov);
    // E W = 2 sigma_xy / sqrt(2 sigma_xx) * phi(theta_x / sqrt(2 sigma_xx))
    let r = (2.0 * cov.sigma_xx()).sqrt();
    let mean_w = 2.0 * cov.sigma_xy() / r * std_normal_pdf(theta_star.theta_x / r);
    (av * d + 0.5 * av * av * cov.sigma_yy()).exp() * h - av * (d + mean_w) - 1.0
}

fn require_nondegenerate(cov: &CovarianceSpec) -> Result<()> {
    if cov.is_degenerate() {
        return Err(Error::InvalidParameter(format!(
            "conditional law of T3 needs |rho| < 1, got rho = {}",
            cov.rho()
        )));
    }
    Ok(())
}

/// `(ln D1, ln D2)`.
pub fn ln_conditional_weights(t1: f64, t2: f64, theta_star: &ThetaStar, cov: &CovarianceSpec) -> Result<(f64, f64)> {
    require_nondegenerate(cov)?;
    let sx = cov.sigma_xx().sqrt();
    let sy = cov.sigma_yy().sqrt();
    let rho = cov.rho();
    let outer = (2.0 * cov.one_minus_rho2()).sqrt();
    let (tx, ty) = (theta_star.theta_x, theta_star.theta_y);
    let term = |dy: f64, dx: f64| {
        ln_std_normal_pdf(dy / (2.0 * cov.sigma_yy()).sqrt()) + ln_std_normal_pdf((rho * dy / sy - dx / sx) / outer)
    };
    Ok((term(t2 - ty, t1 - tx), term(t2 + ty, t1 + tx)))
}

pub fn conditional_weights(t1: f64, t2: f64, theta_star: &ThetaStar, cov: &CovarianceSpec) -> Result<ConditionalWeights> {
    let (l1, l2) = ln_conditional_weights(t1, t2, theta_star, cov)?;
    Ok(ConditionalWeights {
        d1_term: l1.exp(),
        d2_term: l2.exp(),
    })
}

/// Conditional density of `T3 = Y[2] - theta_y^S` given `(T1, T2) = (t1, t2)`:
/// a two-component normal mixture with component variance `sigma_yy / 2`.
pub fn cond_t3_pdf(t3: f64, t1: f64, t2: f64, theta_star: &ThetaStar, cov: &CovarianceSpec) -> Result<f64> {
    let (l1, l2) = ln_conditional_weights(t1, t2, theta_star, cov)?;
    let norm = log_add_exp(l1, l2);
    let (w1, w2) = ((l1 - norm).exp(), (l2 - norm).exp());
    let s = (2.0 / cov.sigma_yy()).sqrt();
    let k = |u: f64| s * std_normal_pdf(s * u);
    let ty = theta_star.theta_y;
    Ok(w1 * k(t3 + 0.5 * (t2 - ty)) + w2 * k(t3 + 0.5 * (t2 + ty)))
}

/// `ln Delta(t1, t2, theta*)`.
pub fn ln_delta(t1: f64, t2: f64, theta_star: &ThetaStar, a: LinexParams, cov: &CovarianceSpec) -> Result<f64> {
    let (l1, l2) = ln_conditional_weights(t1, t2, theta_star, cov)?;
    let h = 0.5 * a.a() * theta_star.theta_y;
    Ok(log_add_exp(l1 + h, l2 - h) - log_add_exp(l1, l2))
}

/// `E[e^{a T3} | T1 = t1, T2 = t2]`.
pub fn cond_t3_mgf(a: LinexParams, t1: f64, t2: f64, theta_star: &ThetaStar, cov: &CovarianceSpec) -> Result<f64> {
    let av = a.a();
    let ld = ln_delta(t1, t2, theta_star, a, cov)?;
    Ok((0.25 * av * av * cov.sigma_yy() - 0.5 * av * t2 + ld).exp())
}

/// The conditionally optimal shift `-(1/a) ln E[e^{a T3} | t1, t2]`.
pub fn varphi(t1: f64, t2: f64, theta_star: &ThetaStar, a: LinexParams, cov: &CovarianceSpec) -> Result<f64> {
    let ld = ln_delta(t1, t2, theta_star, a, cov)?;
    Ok(clip_value(t2, a, cov) - ld / a.a())
}

/// `t2/2 - a sigma_yy/4`, the value both bounds take when finite.
#[inline]
pub fn clip_value(t2: f64, a: LinexParams, cov: &CovarianceSpec) -> f64 {
    0.5 * t2 - 0.25 * a.a() * cov.sigma_yy()
}

/// Sign of `x` with values within `tol` of zero reported as zero.
#[inline]
fn sign_with_slack(x: f64, scale: f64) -> i8 {
    let tol = BOUNDARY_RTOL * scale;
    if x < -tol {
        -1
    } else if x > tol {
        1
    } else {
        0
    }
}

/// `(phi_I, phi_S)`; infinite when the corresponding region is not entered.
pub fn phi_bounds(t1: f64, t2: f64, a: LinexParams, cov: &CovarianceSpec) -> (f64, f64) {
    let xi = cov.xi();
    let rho = cov.rho();
    let half = 0.5 * a.a() * cov.sigma_yy() * cov.one_minus_rho2();
    // t1 xi - rho t2 vs 0
    let s1 = sign_with_slack(t1 * xi - rho * t2, (t1 * xi).abs() + (rho * t2).abs());
    // t2 - xi rho t1 vs -a sigma_yy (1 - rho^2) / 2
    let s2 = sign_with_slack(
        t2 - xi * rho * t1 + half,
        t2.abs() + (xi * rho * t1).abs() + half.abs(),
    );
    let v = clip_value(t2, a, cov);
    let lo = if s1 < 0 && s2 < 0 { v } else { f64::NEG_INFINITY };
    let hi = if s1 > 0 && s2 > 0 { v } else { f64::INFINITY };
    (lo, hi)
}
