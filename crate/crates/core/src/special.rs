//! Error-function family used throughout the channel model.
//!
//! `erfc` is the FreeBSD/musl implementation shipped by the `libm` crate,
//! which stays within one ulp over the arguments this crate cares about.

use std::f64::consts::FRAC_1_SQRT_2;

/// Complementary error function.
#[inline]
pub fn erfc(x: f64) -> f64 {
    libm::erfc(x)
}

/// Standard normal upper tail, `Q(z) = erfc(z / sqrt 2) / 2`.
///
/// `Q(+inf) = 0`, `Q(-inf) = 1`, and `Q(-z) = 1 - Q(z)`.
#[inline]
pub fn q_function(z: f64) -> f64 {
    if z.is_nan() {
        return f64::NAN;
    }
    0.5 * libm::erfc(z * FRAC_1_SQRT_2)
}
