//! Asymmetric linear-exponential (LINEX) loss.

use crate::error::{Error, Result};
use crate::types::LinexParams;

/// Largest exponent whose `exp` is finite.
const MAX_EXPONENT: f64 = 709.782_712_893_384;

/// `exp(a (delta - theta)) - a (delta - theta) - 1`.
///
/// Overflow of the exponential is an error rather than `inf`.
pub fn linex_loss(delta: f64, theta: f64, a: LinexParams) -> Result<f64> {
    linex_of_error(delta - theta, a)
}

/// LINEX loss as a function of the estimation error `delta - theta`.
#[inline]
pub fn linex_of_error(err: f64, a: LinexParams) -> Result<f64> {
    let e = a.a() * err;
    if e > MAX_EXPONENT || e.is_nan() {
        return Err(Error::LossOverflow { exponent: e });
    }
    // expm1(e) - e keeps the O(e^2) value accurate near zero
    Ok((e.exp_m1() - e).max(0.0))
}
