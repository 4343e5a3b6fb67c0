//! Shared domain types.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `|rho|` may exceed one by this much from rounding before it is rejected.
const RHO_SLACK: f64 = 1e-12;

/// Known common 2x2 covariance matrix of `(X, Y)`.
///
/// `rho` and `xi` are derived from the three entries and cannot be set on
/// their own. `|rho| = 1` is accepted; the second diagonal entry of the
/// Cholesky factor is then exactly zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawCovariance", into = "RawCovariance")]
pub struct CovarianceSpec {
    sigma_xx: f64,
    sigma_xy: f64,
    sigma_yy: f64,
    rho: f64,
    xi: f64,
}

#[derive(Serialize, Deserialize)]
struct RawCovariance {
    sigma_xx: f64,
    sigma_xy: f64,
    sigma_yy: f64,
}

impl TryFrom<RawCovariance> for CovarianceSpec {
    type Error = Error;
    fn try_from(r: RawCovariance) -> Result<Self> {
        CovarianceSpec::new(r.sigma_xx, r.sigma_xy, r.sigma_yy)
    }
}

impl From<CovarianceSpec> for RawCovariance {
    fn from(c: CovarianceSpec) -> Self {
        RawCovariance {
            sigma_xx: c.sigma_xx,
            sigma_xy: c.sigma_xy,
            sigma_yy: c.sigma_yy,
        }
    }
}

impl CovarianceSpec {
    /// Entries in the order `(sigma_xx, sigma_xy, sigma_yy)`.
    pub fn new(sigma_xx: f64, sigma_xy: f64, sigma_yy: f64) -> Result<Self> {
        if !(sigma_xx.is_finite() && sigma_xy.is_finite() && sigma_yy.is_finite()) {
            return Err(Error::InvalidCovariance("entries must be finite".into()));
        }
        if sigma_xx <= 0.0 || sigma_yy <= 0.0 {
            return Err(Error::InvalidCovariance(format!(
                "variances must be positive (sigma_xx = {sigma_xx}, sigma_yy = {sigma_yy})"
            )));
        }
        let rho = sigma_xy / (sigma_xx * sigma_yy).sqrt();
        if rho.abs() > 1.0 + RHO_SLACK {
            return Err(Error::InvalidCovariance(format!(
                "|rho| = {:.6} exceeds 1; the matrix is not positive semi-definite",
                rho.abs()
            )));
        }
        Ok(CovarianceSpec {
            sigma_xx,
            sigma_xy,
            sigma_yy,
            rho: rho.clamp(-1.0, 1.0),
            xi: (sigma_yy / sigma_xx).sqrt(),
        })
    }

    /// Builds the matrix from marginal variances and a correlation.
    pub fn from_correlation(sigma_xx: f64, sigma_yy: f64, rho: f64) -> Result<Self> {
        if !rho.is_finite() || rho.abs() > 1.0 {
            return Err(Error::InvalidCovariance(format!("rho = {rho} outside [-1, 1]")));
        }
        let mut c = Self::new(sigma_xx, rho * (sigma_xx * sigma_yy).sqrt(), sigma_yy)?;
        // keep the caller's rho bit-exact, e.g. for rho = -1
        c.rho = rho;
        Ok(c)
    }

    pub fn sigma_xx(&self) -> f64 {
        self.sigma_xx
    }

    pub fn sigma_xy(&self) -> f64 {
        self.sigma_xy
    }

    pub fn sigma_yy(&self) -> f64 {
        self.sigma_yy
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// `sqrt(sigma_yy / sigma_xx)`
    pub fn xi(&self) -> f64 {
        self.xi
    }

    /// `|Sigma|`, clamped at zero.
    pub fn det(&self) -> f64 {
        (self.sigma_xx * self.sigma_yy - self.sigma_xy * self.sigma_xy).max(0.0)
    }

    /// `1 - rho^2`
    pub fn one_minus_rho2(&self) -> f64 {
        (1.0 - self.rho * self.rho).max(0.0)
    }

    pub fn is_degenerate(&self) -> bool {
        self.one_minus_rho2() <= 1e-12
    }

    /// Lower-triangular factor `[[l11, 0], [l21, l22]]` with `L L^T = Sigma`.
    pub fn cholesky(&self) -> [[f64; 2]; 2] {
        let sy = self.sigma_yy.sqrt();
        [
            [self.sigma_xx.sqrt(), 0.0],
            [self.rho * sy, sy * self.one_minus_rho2().sqrt()],
        ]
    }
}

/// A point in the `(x, y)` plane.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Pair {
    pub x: f64,
    pub y: f64,
}

impl Pair {
    pub const fn new(x: f64, y: f64) -> Self {
        Pair { x, y }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl std::ops::Add for Pair {
    type Output = Pair;
    fn add(self, o: Pair) -> Pair {
        Pair::new(self.x + o.x, self.y + o.y)
    }
}

/// Mean vectors of the two populations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanVectorPair {
    pub theta1: Pair,
    pub theta2: Pair,
}

impl MeanVectorPair {
    pub fn new(theta1: Pair, theta2: Pair) -> Result<Self> {
        if !(theta1.is_finite() && theta2.is_finite()) {
            return Err(Error::InvalidParameter("mean vectors must be finite".into()));
        }
        Ok(MeanVectorPair { theta1, theta2 })
    }

    pub fn theta_star(&self) -> ThetaStar {
        ThetaStar {
            theta_x: (self.theta1.x - self.theta2.x).abs(),
            theta_y: (self.theta1.y - self.theta2.y).abs(),
        }
    }

    pub fn swapped(&self) -> Self {
        MeanVectorPair {
            theta1: self.theta2,
            theta2: self.theta1,
        }
    }

    pub fn shifted(&self, by: Pair) -> Self {
        MeanVectorPair {
            theta1: self.theta1 + by,
            theta2: self.theta2 + by,
        }
    }
}

/// Nonnegative gaps `(theta_x, theta_y)` between the two mean vectors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThetaStar {
    pub theta_x: f64,
    pub theta_y: f64,
}

impl ThetaStar {
    pub fn new(theta_x: f64, theta_y: f64) -> Result<Self> {
        if !(theta_x >= 0.0 && theta_y >= 0.0) || !theta_x.is_finite() || !theta_y.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "theta* must be finite and nonnegative, got ({theta_x}, {theta_y})"
            )));
        }
        Ok(ThetaStar { theta_x, theta_y })
    }

    /// Mean vectors `(0, 0)` and `(theta_x, theta_y)`: the population with
    /// the larger x-mean also has the larger y-mean.
    pub fn concordant_means(&self) -> MeanVectorPair {
        MeanVectorPair {
            theta1: Pair::new(self.theta_x, self.theta_y),
            theta2: Pair::new(0.0, 0.0),
        }
    }
}

/// Shape parameter `a` of the LINEX loss.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct LinexParams {
    a: f64,
}

impl LinexParams {
    pub fn new(a: f64) -> Result<Self> {
        if a == 0.0 || !a.is_finite() {
            return Err(Error::InvalidLossParameter(a));
        }
        Ok(LinexParams { a })
    }

    #[inline]
    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn negated(&self) -> Self {
        LinexParams { a: -self.a }
    }
}

impl TryFrom<f64> for LinexParams {
    type Error = Error;
    fn try_from(a: f64) -> Result<Self> {
        LinexParams::new(a)
    }
}

impl From<LinexParams> for f64 {
    fn from(p: LinexParams) -> f64 {
        p.a
    }
}

/// One observation `Z_i = (X_i, Y_i)` from each population.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObservationPair {
    pub z1: Pair,
    pub z2: Pair,
}

impl ObservationPair {
    pub fn new(z1: Pair, z2: Pair) -> Result<Self> {
        if !(z1.is_finite() && z2.is_finite()) {
            return Err(Error::InvalidParameter("observations must be finite".into()));
        }
        Ok(ObservationPair { z1, z2 })
    }

    pub fn swapped(&self) -> Self {
        ObservationPair {
            z1: self.z2,
            z2: self.z1,
        }
    }

    pub fn shifted(&self, by: Pair) -> Self {
        ObservationPair {
            z1: self.z1 + by,
            z2: self.z2 + by,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn covariance_derived_fields() {
        let c = CovarianceSpec::new(8.1645, 40.0655, 952.9425).unwrap();
        assert!((c.rho() - 0.454_2).abs() < 1e-4);
        assert!((c.xi() - 10.803_601_375_6).abs() < 1e-9);
        assert!((c.det() - (8.1645 * 952.9425 - 40.0655f64.powi(2))).abs() < 1e-9);
    }

    #[test]
    fn covariance_rejects_invalid() {
        assert!(CovarianceSpec::new(0.0, 0.0, 1.0).is_err());
        assert!(CovarianceSpec::new(1.0, 0.0, -1.0).is_err());
        assert!(CovarianceSpec::new(1.0, 2.0, 1.0).is_err());
        assert!(CovarianceSpec::new(f64::NAN, 0.0, 1.0).is_err());
    }

    #[test]
    fn degenerate_correlation_is_accepted() {
        let c = CovarianceSpec::new(2.0, 2.0, 2.0).unwrap();
        assert_eq!(c.rho(), 1.0);
        assert!(c.is_degenerate());
        assert_eq!(c.cholesky()[1][1], 0.0);
        let c = CovarianceSpec::from_correlation(4.0, 4.0, -1.0).unwrap();
        assert_eq!(c.rho(), -1.0);
        assert_eq!(c.sigma_xy(), -4.0);
        assert_eq!(c.cholesky()[1][1], 0.0);
    }

    #[test]
    fn cholesky_reproduces_sigma() {
        let c = CovarianceSpec::new(2.0, 0.7, 3.0).unwrap();
        let l = c.cholesky();
        assert!((l[0][0] * l[0][0] - 2.0).abs() < 1e-14);
        assert!((l[1][0] * l[0][0] - 0.7).abs() < 1e-14);
        assert!((l[1][0] * l[1][0] + l[1][1] * l[1][1] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn linex_params_reject_zero() {
        assert!(LinexParams::new(0.0).is_err());
        assert!(LinexParams::new(f64::INFINITY).is_err());
        assert_eq!(LinexParams::new(-1.5).unwrap().negated().a(), 1.5);
    }

    #[test]
    fn theta_star_from_means() {
        let m = MeanVectorPair::new(Pair::new(0.2, 2.0), Pair::new(2.0, 0.2)).unwrap();
        let t = m.theta_star();
        assert!((t.theta_x - 1.8).abs() < 1e-15);
        assert!((t.theta_y - 1.8).abs() < 1e-15);
        assert!(ThetaStar::new(-0.1, 0.0).is_err());
    }
}
