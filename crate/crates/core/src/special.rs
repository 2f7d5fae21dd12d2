//! Error function, normal CDF, and cancellation-free Gaussian mass over an
//! interval.
//!
//! `erf`/`erfc` are the `libm` ports of the musl implementations (within a
//! few ulp). The interval helpers pick the erf or erfc branch so that
//! differences of two values near ±1 do not lose precision.

use std::f64::consts::SQRT_2;

pub use libm::{erf, erfc};

/// 2·sqrt(2·ln 2): converts a full width at half maximum into a standard
/// deviation (`sigma = fwhm / FWHM_TO_SIGMA`).
pub fn fwhm_to_sigma() -> f64 {
    2.0 * (2.0 * std::f64::consts::LN_2).sqrt()
}

/// Standard normal cumulative distribution function.
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / SQRT_2)
}

/// `erf(b) - erf(a)` evaluated without catastrophic cancellation.
pub fn erf_diff(a: f64, b: f64) -> f64 {
    if a >= 0.0 && b >= 0.0 {
        erfc(a) - erfc(b)
    } else if a <= 0.0 && b <= 0.0 {
        erfc(-b) - erfc(-a)
    } else {
        erf(b) - erf(a)
    }
}

/// Fraction of a squared-Gaussian pulse `exp(-(t-c)^2/sigma^2)` that falls
/// inside `[a, b]`, i.e. `½[erf((b-c)/σ) - erf((a-c)/σ)]`.
pub fn gaussian_energy_fraction(a: f64, b: f64, center: f64, sigma: f64) -> f64 {
    0.5 * erf_diff((a - center) / sigma, (b - center) / sigma)
}
