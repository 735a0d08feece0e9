//! The free-motion time density `phi` and its desorption-corrected sum.

use std::f64::consts::PI;

use ndarray::Array2;
use rayon::prelude::*;

use super::params::PhysicalParams;
use crate::error::{Error, Result};
use crate::mathcore::quadrature::GaussLegendre;
use crate::mathcore::{erfcx_unchecked, ln_pmf, poisson_quantile};

/// Above this argument `1/(sqrt(pi) x) - erfcx(x)` is summed from its
/// asymptotic series instead of being formed as a difference.
const ASYMPTOTIC_CUTOFF: f64 = 10.0;

/// `1/(sqrt(pi) x) - erfcx(x)` for `x > 0`.
fn erfcx_defect(x: f64) -> f64 {
    if x < ASYMPTOTIC_CUTOFF {
        return 1.0 / (PI.sqrt() * x) - erfcx_unchecked(x);
    }
    // erfcx(x) ~ 1/(sqrt(pi) x) * sum_n (-1)^n (2n-1)!! / (2x^2)^n
    let inv = 1.0 / (2.0 * x * x);
    let mut term = 1.0;
    let mut sum = 0.0;
    for n in 1..=12 {
        term *= -((2 * n - 1) as f64) * inv;
        sum -= term;
    }
    sum / (PI.sqrt() * x)
}

pub(crate) fn phi1_unchecked(tau: f64, kappa_a: f64, diffusion: f64) -> f64 {
    if kappa_a == 0.0 {
        return 0.0;
    }
    let x = kappa_a * (tau / diffusion).sqrt();
    (kappa_a * kappa_a / diffusion * erfcx_defect(x)).max(0.0)
}

/// Density of the free-motion time of a particle found bound, without
/// desorption:
///
/// `phi(tau) = kappa_a / sqrt(pi D tau) - kappa_a^2 / D * erfcx(kappa_a sqrt(tau / D))`.
///
/// `kappa_d` is ignored.
pub fn phi_no_desorption(tau: f64, params: &PhysicalParams) -> Result<f64> {
    if !(tau > 0.0) || tau.is_infinite() {
        return Err(Error::invalid(format!("tau must be finite and > 0, got {tau}")));
    }
    params.validate()?;
    Ok(phi1_unchecked(tau, params.kappa_a, params.diffusion))
}

fn erfcx_at(tau: f64, params: &PhysicalParams) -> f64 {
    erfcx_unchecked(params.kappa_a * (tau / params.diffusion).sqrt())
}

/// `int_{t0}^{t1} phi(tau) dtau`, exact through `phi = -d/dtau erfcx(kappa_a sqrt(tau/D))`.
pub fn phi_mass(t0: f64, t1: f64, params: &PhysicalParams) -> f64 {
    erfcx_at(t0.max(0.0), params) - erfcx_at(t1.max(0.0), params)
}

/// Probability of being bound at `t` without desorption,
/// `1 - erfcx(kappa_a sqrt(t / D))`.
pub fn bound_fraction_no_desorption(t: f64, params: &PhysicalParams) -> f64 {
    phi_mass(0.0, t, params)
}

/// `int_{tau_floor}^inf phi(tau)^2 dtau`.
///
/// The square of the raw density is not integrable at 0, so the lower limit
/// is floored; the tables use half a grid step.
pub fn phi_norm_sq(params: &PhysicalParams, tau_floor: f64) -> Result<f64> {
    params.validate()?;
    if !(tau_floor > 0.0) || tau_floor.is_infinite() {
        return Err(Error::invalid(format!("tau_floor must be finite and > 0, got {tau_floor}")));
    }
    if params.kappa_a == 0.0 {
        return Ok(0.0);
    }
    let (ka, d) = (params.kappa_a, params.diffusion);
    // phi^2 decays like tau^-3 past D/kappa_a^2; in log tau the integrand
    // is smooth and the tail beyond 1e12 scales is negligible.
    let tau_c = d / (ka * ka);
    let u0 = tau_floor.ln();
    let u1 = (tau_floor.max(tau_c) * 1e12).ln();
    let panels = ((u1 - u0) * 4.0).ceil() as usize;
    let h = (u1 - u0) / panels as f64;
    let rule = GaussLegendre::new(12);
    let f = |u: f64| {
        let tau = u.exp();
        let p = phi1_unchecked(tau, ka, d);
        p * p * tau
    };
    let body: f64 = (0..panels)
        .map(|i| rule.integrate(u0 + i as f64 * h, u0 + (i + 1) as f64 * h, f))
        .sum();
    // phi ~ kappa_a^2/D / (2 sqrt(pi) x^3) beyond the last panel
    let tau_hi = u1.exp();
    let c = tau_hi.powf(1.5) * phi1_unchecked(tau_hi, ka, d);
    Ok(body + c * c / (2.0 * tau_hi * tau_hi))
}

/// Truncation order `J = Q_Poi(1 - eps / ||phi||^2; kappa_d T)`, at least 1.
///
/// When `eps >= ||phi||^2` the level would leave `(0, 1)`; 1 is returned.
pub fn truncation_order(eps: f64, params: &PhysicalParams, phi_norm_sq: f64) -> Result<u64> {
    if !(eps > 0.0) || eps.is_infinite() {
        return Err(Error::invalid(format!("eps must be finite and > 0, got {eps}")));
    }
    if !(phi_norm_sq >= 0.0) {
        return Err(Error::invalid(format!("phi_norm_sq must be >= 0, got {phi_norm_sq}")));
    }
    params.validate()?;
    if eps >= phi_norm_sq {
        return Ok(1);
    }
    Ok(poisson_quantile(1.0 - eps / phi_norm_sq, params.desorption_mean())?.max(1))
}

/// Cell means of `phi^{j*}` for `j = 1..=n_terms` on cells
/// `[i dtau, (i+1) dtau)`, `i < n_cells`.
///
/// The first power uses the exact cell masses. Each further power is the
/// exact cell mean of the convolution of the piecewise-constant previous
/// power with the piecewise-constant first power.
pub fn phi_powers(params: &PhysicalParams, tau_step: f64, n_cells: usize, n_terms: usize) -> Vec<Vec<f64>> {
    let first: Vec<f64> = (0..n_cells)
        .map(|i| phi_mass(i as f64 * tau_step, (i + 1) as f64 * tau_step, params) / tau_step)
        .collect();
    let mut powers = Vec::with_capacity(n_terms);
    if n_terms == 0 {
        return powers;
    }
    powers.push(first);
    for _ in 1..n_terms {
        let prev = powers.last().unwrap();
        let first = &powers[0];
        // knot[i] = value of the convolution at (i + 1) dtau
        let knots: Vec<f64> = (0..n_cells)
            .into_par_iter()
            .map(|i| tau_step * (0..=i).map(|l| prev[l] * first[i - l]).sum::<f64>())
            .collect();
        let next: Vec<f64> = (0..n_cells)
            .map(|i| 0.5 * (if i == 0 { 0.0 } else { knots[i - 1] } + knots[i]))
            .collect();
        powers.push(next);
    }
    powers
}

/// Tabulated `phi(tau, t)` on the midpoint grid `tau_i = (i + 1/2) dtau`
/// covering `(0, T]`.
#[derive(Debug, Clone)]
pub struct PhiTable {
    params: PhysicalParams,
    tau_step: f64,
    eps: f64,
    j_max: u64,
    norm_sq: f64,
    /// `phi(tau_i)` sampled pointwise.
    samples: Vec<f64>,
    /// Cell means of `phi^{j*}`, `powers[j - 1]`.
    powers: Vec<Vec<f64>>,
    t_values: Vec<f64>,
    values: Array2<f64>,
}

/// Tabulates `phi(tau, T) = sum_{j=1}^{J-1} phi^{j*}(tau) p[j-1; kappa_d (T - tau)]`
/// with `J` from [`truncation_order`]; at least the first term is kept.
pub fn phi_general(params: &PhysicalParams, tau_steps: usize, eps: f64) -> Result<PhiTable> {
    params.validate()?;
    if tau_steps < 16 {
        return Err(Error::invalid(format!("tau_steps must be >= 16, got {tau_steps}")));
    }
    if !(eps > 0.0) || eps.is_infinite() {
        return Err(Error::invalid(format!("eps must be finite and > 0, got {eps}")));
    }
    let tau_step = params.horizon / tau_steps as f64;
    let norm_sq = phi_norm_sq(params, 0.5 * tau_step)?;
    let j_max = truncation_order(eps, params, norm_sq)?;
    let n_terms = j_max.saturating_sub(1).max(1) as usize;
    let samples = (0..tau_steps)
        .map(|i| phi1_unchecked((i as f64 + 0.5) * tau_step, params.kappa_a, params.diffusion))
        .collect();
    let powers = phi_powers(params, tau_step, tau_steps, n_terms);
    let mut table = PhiTable {
        params: *params,
        tau_step,
        eps,
        j_max,
        norm_sq,
        samples,
        powers,
        t_values: vec![params.horizon],
        values: Array2::zeros((tau_steps, 1)),
    };
    table.values = table.tabulate(&[params.horizon]);
    Ok(table)
}

impl PhiTable {
    pub fn params(&self) -> &PhysicalParams {
        &self.params
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn tau_step(&self) -> f64 {
        self.tau_step
    }

    pub fn tau(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * self.tau_step
    }

    pub fn tau_grid(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.tau(i)).collect()
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    /// The truncation order `J`.
    pub fn j_max(&self) -> u64 {
        self.j_max
    }

    /// Number of convolution powers summed.
    pub fn n_terms(&self) -> usize {
        self.powers.len()
    }

    /// The floored `||phi||^2` used for the truncation order.
    pub fn norm_sq(&self) -> f64 {
        self.norm_sq
    }

    pub fn t_values(&self) -> &[f64] {
        &self.t_values
    }

    /// `values[[i, j]] = phi(tau_i, t_values[j])`.
    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    /// Cell means of `phi^{j*}`, indexed `j - 1`.
    pub fn powers(&self) -> &[Vec<f64>] {
        &self.powers
    }

    /// Poisson weights `p[j-1; kappa_d (t - tau_i)]` for every summed term.
    fn poisson_weights(&self, i: usize, t: f64) -> impl Iterator<Item = f64> + '_ {
        let lambda = self.params.kappa_d * (t - self.tau(i)).max(0.0);
        (0..self.powers.len()).map(move |j| ln_pmf(j as u64, lambda).exp())
    }

    /// `phi(tau_i, t)` with the first power sampled at the midpoint.
    pub fn value_at(&self, i: usize, t: f64) -> f64 {
        if self.tau(i) >= t {
            return 0.0;
        }
        let mut w = self.poisson_weights(i, t);
        let mut v = self.samples[i] * w.next().unwrap_or(0.0);
        for (p, w) in self.powers[1..].iter().zip(w) {
            v += p[i] * w;
        }
        v
    }

    /// Mean of `phi(., t)` over cell `i`.
    pub fn cell_mean_at(&self, i: usize, t: f64) -> f64 {
        if self.tau(i) >= t {
            return 0.0;
        }
        self.powers.iter().zip(self.poisson_weights(i, t)).map(|(p, w)| p[i] * w).sum()
    }

    /// `int_0^t phi(tau, t) dtau`, the probability of being bound at `t`.
    pub fn bound_fraction(&self, t: f64) -> f64 {
        let mut s = 0.0;
        for i in 0..self.len() {
            let lo = i as f64 * self.tau_step;
            if lo >= t {
                break;
            }
            let frac = ((t - lo) / self.tau_step).min(1.0);
            s += frac * self.cell_mean_at(i, t);
        }
        s * self.tau_step
    }

    /// Pointwise table for a set of observation times.
    pub fn tabulate(&self, t_values: &[f64]) -> Array2<f64> {
        let mut out = Array2::zeros((self.len(), t_values.len()));
        for ((i, j), v) in out.indexed_iter_mut() {
            *v = self.value_at(i, t_values[j]);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mathcore::quadrature::adaptive;

    fn params(kappa_a: f64, kappa_d: f64) -> PhysicalParams {
        PhysicalParams {
            kappa_a,
            kappa_d,
            diffusion: 1e-10,
            horizon: 3600.0,
            pixel_pitch: 1e-5,
            psf_sigma: 0.0,
        }
    }

    #[test]
    fn zero_adsorption_gives_zero() {
        let p = params(0.0, 0.0);
        assert_eq!(phi_no_desorption(10.0, &p).unwrap(), 0.0);
        assert_eq!(phi_norm_sq(&p, 1.0).unwrap(), 0.0);
        assert!(phi_no_desorption(0.0, &p).is_err());
    }

    #[test]
    fn singular_limit() {
        let p = params(1e-6, 0.0);
        let tau = 1e-12;
        let want = p.kappa_a / (PI * p.diffusion).sqrt();
        let got = phi_no_desorption(tau, &p).unwrap() * tau.sqrt();
        assert!((got - want).abs() < 1e-6 * want);
    }

    #[test]
    fn defect_matches_difference_at_cutoff() {
        let x = ASYMPTOTIC_CUTOFF;
        let direct = 1.0 / (PI.sqrt() * x) - erfcx_unchecked(x);
        assert!((erfcx_defect(x) - direct).abs() < 1e-12 * direct);
    }

    #[test]
    fn mass_matches_quadrature() {
        for (ka, t) in [(1e-6, 3600.0f64), (3e-7, 1000.0), (2e-6, 7200.0)] {
            let p = params(ka, 0.0);
            // tau = u^2 removes the 1/sqrt(tau) singularity
            let f = |u: f64| if u == 0.0 { 2.0 * ka / (PI * p.diffusion).sqrt() } else {
                2.0 * u * phi_no_desorption(u * u, &p).unwrap()
            };
            let quad = adaptive(&f, 0.0, t.sqrt(), 1e-13);
            let closed = bound_fraction_no_desorption(t, &p);
            assert!((quad - closed).abs() < 1e-9, "quad {quad} closed {closed}");
        }
    }

    #[test]
    fn norm_sq_matches_direct_quadrature() {
        let p = params(1e-6, 0.0);
        let floor = 0.5;
        let f = |tau: f64| phi_no_desorption(tau, &p).unwrap().powi(2);
        let mut direct = 0.0;
        let mut a = floor;
        while a < 1e13 {
            direct += adaptive(&f, a, 2.0 * a, 1e-18);
            a *= 2.0;
        }
        let got = phi_norm_sq(&p, floor).unwrap();
        assert!((got - direct).abs() < 1e-8 * direct, "{got} vs {direct}");
    }

    #[test]
    fn truncation_order_edge_cases() {
        let p = params(1e-6, 0.0);
        assert_eq!(truncation_order(1e-5, &p, 0.02).unwrap(), 1);
        assert_eq!(truncation_order(1.0, &params(1e-6, 1e-2), 0.02).unwrap(), 1);
        assert!(truncation_order(0.0, &p, 0.02).is_err());
        let q = params(1e-6, 1e-2);
        let mut last = 0;
        for eps in [1e-2, 1e-3, 1e-4, 1e-5, 1e-6] {
            let j = truncation_order(eps, &q, 0.02).unwrap();
            assert!(j >= last);
            last = j;
        }
    }

    #[test]
    fn no_desorption_table_is_first_term() {
        let p = params(1e-6, 0.0);
        let t = phi_general(&p, 64, 1e-4).unwrap();
        assert_eq!(t.j_max(), 1);
        assert_eq!(t.n_terms(), 1);
        for i in 0..t.len() {
            assert_eq!(t.values()[[i, 0]], phi_no_desorption(t.tau(i), &p).unwrap());
        }
        let b = t.bound_fraction(p.horizon);
        assert!((b - bound_fraction_no_desorption(p.horizon, &p)).abs() < 1e-14);
        let later = t.tabulate(&[1000.0, 3600.0]);
        for i in 0..t.len() {
            if t.tau(i) < 1000.0 {
                assert_eq!(later[[i, 0]], later[[i, 1]]);
            }
        }
    }

    #[test]
    fn powers_are_nonnegative_and_submultiplicative() {
        let p = params(1e-6, 0.0);
        let pw = phi_powers(&p, 1.0, 32, 3);
        assert_eq!(pw.len(), 3);
        let masses: Vec<f64> = pw.iter().map(|v| v.iter().sum::<f64>()).collect();
        assert!(masses[1] <= masses[0] * masses[0] + 1e-15);
        assert!(pw.iter().flatten().all(|&v| v >= 0.0));
    }

    #[test]
    fn desorption_table_is_subprobability() {
        let p = params(1e-6, 1e-3);
        let t = phi_general(&p, 512, 1e-4).unwrap();
        assert!(t.j_max() > 1);
        assert!(t.values().iter().all(|&v| v >= 0.0));
        let b = t.bound_fraction(p.horizon);
        assert!(b > 0.0 && b <= 1.0, "{b}");
        // desorption can only lower the bound fraction
        assert!(b < bound_fraction_no_desorption(p.horizon, &p));
    }
}
