//! Scalar math that behaves identically with and without `std`.

pub use libm::{exp, fabs as abs, log as ln, log1p, sqrt, tanh};

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + exp(-x))
    } else {
        let e = exp(x);
        e / (1.0 + e)
    }
}

/// `ln(1 + e^x)` without overflow.
#[inline]
pub fn softplus(x: f64) -> f64 {
    if x > 30.0 {
        x + log1p(exp(-x))
    } else {
        log1p(exp(x))
    }
}

#[inline]
pub fn powi(x: f64, n: i32) -> f64 {
    libm::pow(x, n as f64)
}

#[inline]
pub fn clamp(x: f64, lo: f64, hi: f64) -> f64 {
    if x < lo {
        lo
    } else if x > hi {
        hi
    } else {
        x
    }
}

pub use libm::{cos as libm_cos, sin as libm_sin};

/// Wraps an hour onto `[0, 24)`.
#[inline]
pub fn wrap24(h: f64) -> f64 {
    h - 24.0 * libm::floor(h / 24.0)
}
