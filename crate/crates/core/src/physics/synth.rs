//! Point-source release profiles and their PSDR over a scale grid.

use std::collections::BTreeMap;

use ndarray::Array3;
use rayon::prelude::*;

use super::params::PhysicalParams;
use super::phi::{phi_mass, PhiTable};
use crate::error::{Error, Result};
use crate::mathcore::ln_pmf;
use crate::operator::{PsdrTensor, SigmaGrid};

/// Relative slack allowed when the last scale boundary meets `sigma_max`.
const SIGMA_MAX_SLACK: f64 = 1e-9;

/// A source at pixel `(m, n)` (0-based) releasing particles at constant
/// `rate` [1/s] during `[t_start, t_stop]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointSource {
    pub m: usize,
    pub n: usize,
    pub rate: f64,
    pub t_start: f64,
    pub t_stop: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SourceSpec {
    pub sources: Vec<PointSource>,
}

impl SourceSpec {
    pub fn new(sources: Vec<PointSource>) -> Self {
        SourceSpec { sources }
    }

    pub fn validate(&self, horizon: f64, dims: (usize, usize)) -> Result<()> {
        for (i, s) in self.sources.iter().enumerate() {
            if s.m >= dims.0 || s.n >= dims.1 {
                return Err(Error::invalid(format!(
                    "source {i} at ({}, {}) outside {}x{}",
                    s.m, s.n, dims.0, dims.1
                )));
            }
            if !(s.rate >= 0.0) || s.rate.is_infinite() {
                return Err(Error::invalid(format!("source {i}: rate must be finite and >= 0")));
            }
            if !(0.0 <= s.t_start && s.t_start <= s.t_stop && s.t_stop <= horizon) {
                return Err(Error::invalid(format!(
                    "source {i}: need 0 <= t_start <= t_stop <= T, got [{}, {}] with T = {horizon}",
                    s.t_start, s.t_stop
                )));
            }
        }
        Ok(())
    }

    /// Total particles released, `sum rate * (t_stop - t_start)`.
    pub fn released(&self) -> f64 {
        self.sources.iter().map(|s| s.rate * (s.t_stop - s.t_start)).sum()
    }
}

/// `P(X >= j)` for `X ~ Poisson(u)`, `j = 0..=n`, i.e. the regularized lower
/// incomplete gamma `int_0^u p[j-1; x] dx` for `j >= 1`.
fn poisson_upper_tails(n: usize, u: f64) -> Vec<f64> {
    let mut out = vec![1.0; n + 1];
    if u <= 0.0 {
        out[1..].iter_mut().for_each(|v| *v = 0.0);
        return out;
    }
    let top = n.max(u.ceil() as usize) + 40 + (10.0 * u.sqrt()).ceil() as usize;
    let pmf: Vec<f64> = (0..=top).map(|l| ln_pmf(l as u64, u).exp()).collect();
    let mut suffix = vec![0.0; top + 2];
    for l in (0..=top).rev() {
        suffix[l] = suffix[l + 1] + pmf[l];
    }
    let mut prefix = 0.0;
    for j in 1..=n {
        prefix += pmf[j - 1];
        // below the mean the complement is well conditioned
        out[j] = if (j as f64) <= u { 1.0 - prefix } else { suffix[j] };
    }
    out
}

/// `W_j(tau) = int_lo^hi p[j-1; kappa_d (eta - tau)] deta` for the release
/// window mapped to elapsed times `eta in [T - t_stop, T - t_start]`,
/// `lo = max(tau, T - t_stop)`.
fn window_weights(tau: f64, t_start: f64, t_stop: f64, params: &PhysicalParams, n_terms: usize) -> Vec<f64> {
    let t = params.horizon;
    let lo = tau.max(t - t_stop);
    let hi = t - t_start;
    let mut w = vec![0.0; n_terms];
    if hi <= lo || n_terms == 0 {
        return w;
    }
    let kd = params.kappa_d;
    if kd == 0.0 {
        w[0] = hi - lo;
        return w;
    }
    let g_hi = poisson_upper_tails(n_terms, kd * (hi - tau));
    let g_lo = poisson_upper_tails(n_terms, kd * (lo - tau));
    for j in 1..=n_terms {
        w[j - 1] = ((g_hi[j] - g_lo[j]) / kd).max(0.0);
    }
    // closed form for j = 1, free of the 1 - e^-x cancellation
    w[0] = ((-(kd * (lo - tau))).exp() - (-(kd * (hi - tau))).exp()) / kd;
    w
}

/// Per-bin PSDR of a unit-rate source with the given release window.
fn unit_profile(
    t_start: f64,
    t_stop: f64,
    params: &PhysicalParams,
    phi: &PhiTable,
    tau_bounds: &[f64],
) -> Vec<f64> {
    let k = tau_bounds.len() - 1;
    let dtau = phi.tau_step();
    let powers = phi.powers();
    let mut bins = vec![0.0; k];
    for i in 0..phi.len() {
        let (c0, c1) = (i as f64 * dtau, (i + 1) as f64 * dtau);
        if c0 >= tau_bounds[k] {
            break;
        }
        let w = window_weights(phi.tau(i), t_start, t_stop, params, powers.len());
        if w.iter().all(|&v| v == 0.0) {
            continue;
        }
        let later: f64 = powers[1..].iter().zip(&w[1..]).map(|(p, w)| p[i] * w).sum();
        for (b, out) in bins.iter_mut().enumerate() {
            let lo = c0.max(tau_bounds[b]);
            let hi = c1.min(tau_bounds[b + 1]);
            if hi > lo {
                *out += w[0] * phi_mass(lo, hi, params) + later * (hi - lo);
            }
        }
    }
    bins
}

/// PSDR of a set of point sources: for each bin,
/// `a_k = 1/sqrt(width_k) * int_{tau_{k-1}}^{tau_k} v(tau, T) dtau`
/// with `tau_k = (sigma_k * pitch)^2 / 2D` and
/// `v(tau, T) = int_tau^T s(T - eta) phi(tau, eta) deta`.
pub fn synth_psdr(
    spec: &SourceSpec,
    params: &PhysicalParams,
    grid: &SigmaGrid,
    phi: &PhiTable,
    dims: (usize, usize),
) -> Result<PsdrTensor> {
    params.validate()?;
    if phi.params() != params {
        return Err(Error::invalid("phi table was built for different physical parameters"));
    }
    if dims.0 == 0 || dims.1 == 0 {
        return Err(Error::invalid("image dimensions must be positive"));
    }
    let sigma_max = params.sigma_max_pixels();
    if grid.sigma_max() > sigma_max * (1.0 + SIGMA_MAX_SLACK) {
        return Err(Error::GridExceedsSigmaMax { boundary: grid.sigma_max(), sigma_max });
    }
    spec.validate(params.horizon, dims)?;

    let tau_bounds: Vec<f64> = grid
        .boundaries()
        .iter()
        .map(|&s| params.tau_of_sigma_pixels(s).min(params.horizon))
        .collect();
    let mut windows: BTreeMap<(u64, u64), Vec<f64>> = BTreeMap::new();
    for s in &spec.sources {
        windows.insert((s.t_start.to_bits(), s.t_stop.to_bits()), Vec::new());
    }
    let keys: Vec<(u64, u64)> = windows.keys().copied().collect();
    let profiles: Vec<Vec<f64>> = keys
        .par_iter()
        .map(|&(a, b)| unit_profile(f64::from_bits(a), f64::from_bits(b), params, phi, &tau_bounds))
        .collect();
    for (key, prof) in keys.into_iter().zip(profiles) {
        windows.insert(key, prof);
    }

    let k = grid.len();
    let scale: Vec<f64> = grid.widths().iter().map(|w| 1.0 / w.sqrt()).collect();
    let mut data = Array3::<f64>::zeros((dims.0, dims.1, k));
    for s in &spec.sources {
        let prof = &windows[&(s.t_start.to_bits(), s.t_stop.to_bits())];
        for b in 0..k {
            data[[s.m, s.n, b]] += s.rate * prof[b] * scale[b];
        }
    }
    PsdrTensor::new(data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mathcore::poisson_cdf;
    use crate::mathcore::quadrature::adaptive;
    use crate::physics::phi::{phi_general, phi_no_desorption};

    fn params(kappa_a: f64, kappa_d: f64) -> PhysicalParams {
        PhysicalParams {
            kappa_a,
            kappa_d,
            diffusion: 1e-10,
            horizon: 3600.0,
            pixel_pitch: 7e-5,
            psf_sigma: 0.0,
        }
    }

    fn grid(p: &PhysicalParams) -> SigmaGrid {
        SigmaGrid::with_leading_zero(vec![2.0, 15.0, 20.0, 30.0, 40.0, 50.0, 70.0], None)
            .unwrap()
            .scaled_to(p.sigma_max_pixels())
            .unwrap()
    }

    fn source(m: usize, n: usize, rate: f64, t0: f64, t1: f64) -> PointSource {
        PointSource { m, n, rate, t_start: t0, t_stop: t1 }
    }

    #[test]
    fn upper_tails_match_cdf() {
        for &u in &[0.0, 1e-3, 0.7, 5.0, 42.0] {
            let g = poisson_upper_tails(30, u);
            assert_eq!(g[0], 1.0);
            for j in 1..=30 {
                let want = 1.0 - poisson_cdf(j as u64 - 1, u).unwrap();
                assert!((g[j] - want).abs() < 1e-14, "u={u} j={j}");
            }
        }
    }

    #[test]
    fn empty_and_nonadsorbing_give_zero() {
        let p = params(1e-6, 0.0);
        let phi = phi_general(&p, 256, 1e-4).unwrap();
        let a = synth_psdr(&SourceSpec::default(), &p, &grid(&p), &phi, (8, 8)).unwrap();
        assert!(a.data().iter().all(|&v| v == 0.0));

        let p0 = params(0.0, 0.0);
        let phi0 = phi_general(&p0, 256, 1e-4).unwrap();
        let spec = SourceSpec::new(vec![source(3, 3, 1.0, 0.0, 3600.0)]);
        let a = synth_psdr(&spec, &p0, &grid(&p0), &phi0, (8, 8)).unwrap();
        assert!(a.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn grid_beyond_sigma_max_is_rejected() {
        let p = params(1e-6, 0.0);
        let phi = phi_general(&p, 64, 1e-4).unwrap();
        let g = grid(&p).scaled_to(p.sigma_max_pixels() * 1.01).unwrap();
        let r = synth_psdr(&SourceSpec::default(), &p, &g, &phi, (8, 8));
        assert!(matches!(r, Err(Error::GridExceedsSigmaMax { .. })));
    }

    #[test]
    fn out_of_bounds_source_is_rejected() {
        let p = params(1e-6, 0.0);
        let phi = phi_general(&p, 64, 1e-4).unwrap();
        let spec = SourceSpec::new(vec![source(8, 0, 1.0, 0.0, 1.0)]);
        assert!(synth_psdr(&spec, &p, &grid(&p), &phi, (8, 8)).is_err());
    }

    #[test]
    fn bins_match_nested_quadrature_without_desorption() {
        let p = params(1e-6, 0.0);
        let g = grid(&p);
        let phi = phi_general(&p, 2048, 1e-4).unwrap();
        let (t0, t1, q) = (600.0, 2400.0, 3.0);
        let spec = SourceSpec::new(vec![source(1, 2, q, t0, t1)]);
        let a = synth_psdr(&spec, &p, &g, &phi, (4, 4)).unwrap();
        // v(tau) = q * phi(tau) * |[max(tau, T - t1), T - t0]|, tau = u^2
        let t = p.horizon;
        let f = |u: f64| {
            if u == 0.0 {
                return 0.0;
            }
            let tau = u * u;
            let len = ((t - t0) - tau.max(t - t1)).max(0.0);
            2.0 * u * q * phi_no_desorption(tau, &p).unwrap() * len
        };
        for k in 0..g.len() {
            let (s0, s1) = g.bin(k);
            let u0 = p.tau_of_sigma_pixels(s0).sqrt();
            let u1 = p.tau_of_sigma_pixels(s1).min(t).sqrt();
            let want = adaptive(&f, u0, u1, 1e-12) / g.width(k).sqrt();
            let got = a.data()[[1, 2, k]];
            assert!((got - want).abs() <= 0.02 * want.abs() + 1e-12, "bin {k}: {got} vs {want}");
        }
    }

    #[test]
    fn superposition_and_linearity() {
        let p = params(1e-6, 1e-3);
        let g = grid(&p);
        let phi = phi_general(&p, 256, 1e-4).unwrap();
        let s1 = source(1, 1, 2.0, 0.0, 1800.0);
        let s2 = source(2, 3, 0.5, 1000.0, 3600.0);
        let both = synth_psdr(&SourceSpec::new(vec![s1, s2]), &p, &g, &phi, (5, 5)).unwrap();
        let a1 = synth_psdr(&SourceSpec::new(vec![s1]), &p, &g, &phi, (5, 5)).unwrap();
        let a2 = synth_psdr(&SourceSpec::new(vec![s2]), &p, &g, &phi, (5, 5)).unwrap();
        let sum = a1.data() + a2.data();
        for (x, y) in both.data().iter().zip(sum.iter()) {
            assert!((x - y).abs() <= 1e-15 * x.abs().max(1.0));
        }
        let doubled = synth_psdr(&SourceSpec::new(vec![PointSource { rate: 4.0, ..s1 }]), &p, &g, &phi, (5, 5))
            .unwrap();
        for (x, y) in doubled.data().iter().zip(a1.data().iter()) {
            assert!((x - 2.0 * y).abs() <= 1e-14 * x.abs().max(1e-300));
        }
    }

    #[test]
    fn total_mass_matches_bound_fraction_for_instant_release() {
        // a release confined to the first second behaves like an impulse
        let p = params(1e-6, 2e-3);
        let g = grid(&p);
        let phi = phi_general(&p, 1024, 1e-5).unwrap();
        let spec = SourceSpec::new(vec![source(0, 0, 1.0, 0.0, 1.0)]);
        let a = synth_psdr(&spec, &p, &g, &phi, (1, 1)).unwrap();
        let mass: f64 = (0..g.len()).map(|k| g.width(k).sqrt() * a.data()[[0, 0, k]]).sum();
        let want = phi.bound_fraction(p.horizon);
        assert!((mass - want).abs() < 0.01 * want, "{mass} vs {want}");
    }
}
