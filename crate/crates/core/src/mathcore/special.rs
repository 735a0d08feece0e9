//! Error-function family and the pixel-box/Gaussian weights built on it.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use crate::error::{Error, Result};

const FRAC_2_SQRT_PI: f64 = std::f64::consts::FRAC_2_SQRT_PI;
/// 1/sqrt(2*pi)
const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Below this argument erfcx is evaluated from the Maclaurin series of erf;
/// above it from the Laplace continued fraction.
const SERIES_CUTOFF: f64 = 1.5;

/// Scaled complementary error function `exp(x^2) * erfc(x)`.
///
/// Never forms the literal product for large `x`, so it stays finite and
/// accurate up to `f64::MAX`. Negative arguments use the reflection
/// `erfcx(-x) = 2 exp(x^2) - erfcx(x)`, which overflows for `x < -26.6`.
pub fn erfcx(x: f64) -> Result<f64> {
    if x.is_nan() {
        return Err(Error::invalid("erfcx of NaN"));
    }
    Ok(erfcx_unchecked(x))
}

pub(crate) fn erfcx_unchecked(x: f64) -> f64 {
    if x < 0.0 {
        return 2.0 * (x * x).exp() - erfcx_unchecked(-x);
    }
    if x < SERIES_CUTOFF {
        (x * x).exp() * (1.0 - erf_series(x))
    } else if x.is_infinite() {
        0.0
    } else {
        erfcx_continued_fraction(x)
    }
}

/// Maclaurin series of erf, accurate to a few ulp on `[0, 1.5]`.
fn erf_series(x: f64) -> f64 {
    let x2 = x * x;
    let mut term = x; // (-1)^n x^(2n+1) / n!
    let mut sum = x;
    let mut n = 0.0;
    loop {
        n += 1.0;
        term *= -x2 / n;
        let contrib = term / (2.0 * n + 1.0);
        sum += contrib;
        if contrib.abs() <= 1e-17 * sum.abs() {
            break;
        }
    }
    FRAC_2_SQRT_PI * sum
}

/// `erfcx(x) = 1/sqrt(pi) * 1/(x + (1/2)/(x + 1/(x + (3/2)/(x + ...))))`,
/// evaluated bottom-up with a depth chosen for full double precision.
fn erfcx_continued_fraction(x: f64) -> f64 {
    let depth = if x < 3.0 {
        100
    } else if x < 6.0 {
        50
    } else if x < 12.0 {
        24
    } else {
        10
    };
    let mut f = x;
    for n in (1..=depth).rev() {
        f = x + 0.5 * n as f64 / f;
    }
    1.0 / (PI.sqrt() * f)
}

/// Complementary error function.
pub fn erfc(x: f64) -> Result<f64> {
    if x.is_nan() {
        return Err(Error::invalid("erfc of NaN"));
    }
    Ok(erfc_unchecked(x))
}

pub(crate) fn erfc_unchecked(x: f64) -> f64 {
    if x >= 0.0 {
        if x > 27.3 {
            0.0
        } else {
            erfcx_unchecked(x) * (-x * x).exp()
        }
    } else {
        2.0 - erfc_unchecked(-x)
    }
}

/// Standard normal cumulative distribution function.
pub fn normal_cdf(x: f64) -> Result<f64> {
    if x.is_nan() {
        return Err(Error::invalid("normal_cdf of NaN"));
    }
    Ok(normal_cdf_unchecked(x))
}

pub(crate) fn normal_cdf_unchecked(x: f64) -> f64 {
    0.5 * erfc_unchecked(-x * FRAC_1_SQRT_2)
}

/// Standard normal density.
pub fn normal_pdf(x: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * x * x).exp()
}

/// `Psi(-u) = phi(u) - u * Q(u)` for `u >= 0`, written through the Mills
/// ratio so that the upper tail does not cancel against `u`.
fn psi_lower(u: f64) -> f64 {
    debug_assert!(u >= 0.0);
    let pdf = normal_pdf(u);
    if pdf == 0.0 {
        return 0.0;
    }
    let mills = (PI / 2.0).sqrt() * erfcx_unchecked(u * FRAC_1_SQRT_2);
    (pdf * (1.0 - u * mills)).max(0.0)
}

/// Second antiderivative of the standard normal density,
/// `Psi(x) = x Phi(x) + phi(x)`.
pub fn psi(x: f64) -> f64 {
    if x >= 0.0 {
        x + psi_lower(x)
    } else {
        psi_lower(-x)
    }
}

/// Weight of integer offset `m` in a 1D Gaussian of width `sigma` (pixels)
/// seen through two unit pixel boxes:
///
/// `omega(m) = int_{-1/2}^{1/2} [Phi((m+r+1/2)/s) - Phi((m+r-1/2)/s)] dr`
///
/// evaluated in closed form as
/// `s * [Psi((m+1)/s) - 2 Psi(m/s) + Psi((m-1)/s)]`.
/// At `sigma = 0` this is the box-box triangle sampled at integers.
pub fn omega(sigma: f64, m: i64) -> Result<f64> {
    if !(sigma >= 0.0) || sigma.is_infinite() {
        return Err(Error::invalid(format!("omega requires finite sigma >= 0, got {sigma}")));
    }
    Ok(omega_unchecked(sigma, m))
}

pub(crate) fn omega_unchecked(sigma: f64, m: i64) -> f64 {
    let m = m.unsigned_abs();
    if sigma == 0.0 {
        return if m == 0 { 1.0 } else { 0.0 };
    }
    let inv = 1.0 / sigma;
    if m == 0 {
        // Psi(u) - 2 Psi(0) + Psi(-u) = u + 2 (Psi(-u) - phi(0))
        let v = 1.0 + 2.0 * sigma * (psi_lower(inv) - INV_SQRT_2PI);
        return v.max(0.0);
    }
    // All three arguments are >= 0: the linear part of Psi cancels exactly
    // and only the lower tails remain.
    let m = m as f64;
    let v = sigma
        * (psi_lower((m + 1.0) * inv) - 2.0 * psi_lower(m * inv) + psi_lower((m - 1.0) * inv));
    v.max(0.0)
}

/// Fill `out[i] = omega(sigma, i - radius)` for `i in 0..=2*radius`.
pub(crate) fn omega_row(sigma: f64, radius: usize, out: &mut [f64]) {
    debug_assert_eq!(out.len(), 2 * radius + 1);
    for i in 0..=radius {
        let w = omega_unchecked(sigma, i as i64);
        out[radius + i] = w;
        out[radius - i] = w;
    }
}
