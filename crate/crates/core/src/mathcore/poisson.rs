//! Poisson probability mass function and quantile.

use crate::error::{Error, Result};

/// Above this mean the quantile search starts from a normal-approximation
/// lower bracket instead of zero.
const LARGE_MEAN: f64 = 1e4;

/// `ln(j!)`, exact product for small `j`, Stirling series otherwise.
pub(crate) fn ln_factorial(j: u64) -> f64 {
    if j < 16 {
        let mut p = 1.0f64;
        for i in 2..=j {
            p *= i as f64;
        }
        return p.ln();
    }
    let n = j as f64;
    let inv = 1.0 / n;
    let inv2 = inv * inv;
    n * n.ln() - n + 0.5 * (2.0 * std::f64::consts::PI * n).ln()
        + inv * (1.0 / 12.0 - inv2 * (1.0 / 360.0 - inv2 * (1.0 / 1260.0 - inv2 / 1680.0)))
}

/// `ln p[j; lambda]`; `-inf` where the mass is exactly zero.
pub(crate) fn ln_pmf(j: u64, lambda: f64) -> f64 {
    if lambda == 0.0 {
        return if j == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    j as f64 * lambda.ln() - lambda - ln_factorial(j)
}

/// Poisson probability mass `lambda^j e^(-lambda) / j!`, computed in log space.
pub fn poisson_pmf(j: u64, lambda: f64) -> Result<f64> {
    check_mean(lambda)?;
    Ok(ln_pmf(j, lambda).exp())
}

fn check_mean(lambda: f64) -> Result<()> {
    if !(lambda >= 0.0) || lambda.is_infinite() {
        return Err(Error::invalid(format!("Poisson mean must be finite and >= 0, got {lambda}")));
    }
    Ok(())
}

/// Poisson CDF `P(X <= j)` by summation of the mass function.
pub fn poisson_cdf(j: u64, lambda: f64) -> Result<f64> {
    check_mean(lambda)?;
    let lo = lower_bracket(lambda).min(j);
    let sum: f64 = (lo..=j).map(|i| ln_pmf(i, lambda).exp()).sum();
    Ok(sum.min(1.0))
}

/// Index below which the remaining mass is far beneath double precision.
fn lower_bracket(lambda: f64) -> u64 {
    if lambda <= LARGE_MEAN {
        0
    } else {
        (lambda - 40.0 * lambda.sqrt()).floor().max(0.0) as u64
    }
}

/// Smallest `j` with `P(X <= j) >= p` for `X ~ Poisson(lambda)`.
pub fn poisson_quantile(p: f64, lambda: f64) -> Result<u64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::invalid(format!("quantile level must lie in (0, 1), got {p}")));
    }
    check_mean(lambda)?;
    if lambda == 0.0 {
        return Ok(0);
    }
    let mut j = lower_bracket(lambda);
    let mut cdf = ln_pmf(j, lambda).exp();
    // The mass function is exactly computed term by term; the guard stops
    // at the point where further terms cannot change a double.
    let guard = (lambda + 60.0 * lambda.sqrt() + 60.0) as u64;
    while cdf < p && j < guard {
        j += 1;
        cdf += ln_pmf(j, lambda).exp();
    }
    Ok(j)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pmf_degenerate_at_zero() {
        assert_eq!(poisson_pmf(0, 0.0).unwrap(), 1.0);
        assert_eq!(poisson_pmf(3, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn pmf_direct_formula() {
        let want = 9.0 * (-3.0f64).exp() / 2.0;
        assert!((poisson_pmf(2, 3.0).unwrap() - want).abs() < 1e-15);
    }

    #[test]
    fn pmf_rejects_negative_mean() {
        assert!(poisson_pmf(1, -1.0).is_err());
        assert!(poisson_quantile(0.5, -0.1).is_err());
    }

    #[test]
    fn pmf_normalizes() {
        for &lambda in &[0.1, 1.0, 7.5, 40.0] {
            let s: f64 = (0..400).map(|j| poisson_pmf(j, lambda).unwrap()).sum();
            assert!((s - 1.0).abs() < 1e-12, "lambda={lambda} sum={s}");
        }
    }

    #[test]
    fn ln_factorial_matches_product() {
        let mut acc = 0.0f64;
        for j in 1..200u64 {
            acc += (j as f64).ln();
            assert!((ln_factorial(j) - acc).abs() < 1e-12 * acc.max(1.0), "j={j}");
        }
    }

    #[test]
    fn quantile_degenerate_mean() {
        assert_eq!(poisson_quantile(0.3, 0.0).unwrap(), 0);
        assert_eq!(poisson_quantile(0.999_999, 0.0).unwrap(), 0);
    }

    #[test]
    fn quantile_rejects_bad_level() {
        assert!(poisson_quantile(0.0, 1.0).is_err());
        assert!(poisson_quantile(1.0, 1.0).is_err());
    }

    #[test]
    fn quantile_brute_force_summation() {
        // smallest j with sum_{i<=j} e^-5 5^i / i! >= 0.999, by direct summation
        let mut cdf = 0.0;
        let mut term = (-5.0f64).exp();
        let mut j = 0u64;
        loop {
            cdf += term;
            if cdf >= 0.999 {
                break;
            }
            j += 1;
            term *= 5.0 / j as f64;
        }
        assert_eq!(j, 13);
        assert_eq!(poisson_quantile(0.999, 5.0).unwrap(), 13);
    }

    #[test]
    fn quantile_right_continuity() {
        for &lambda in &[0.7, 4.0, 22.0] {
            for j in 0..20u64 {
                let c = poisson_cdf(j, lambda).unwrap();
                if c > 1.0 - 1e-6 {
                    break;
                }
                assert!(poisson_quantile(c * (1.0 - 1e-12), lambda).unwrap() <= j);
                assert_eq!(poisson_quantile(c + 1e-9, lambda).unwrap(), j + 1);
            }
        }
    }

    #[test]
    fn quantile_large_mean_is_near_mean() {
        let lambda = 1e6;
        let q = poisson_quantile(0.5, lambda).unwrap();
        assert!((q as f64 - lambda).abs() < 2.0);
        let q = poisson_quantile(0.975, lambda).unwrap() as f64;
        assert!((q - (lambda + 1.96 * lambda.sqrt())).abs() < 3.0);
    }
}
