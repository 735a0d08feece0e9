//! Explicit finite-difference solution of the surface-normal reduction of
//! the reaction-diffusion-adsorption-desorption model. Used as an
//! independent check on the tabulated `phi`.

use super::params::PhysicalParams;
use crate::error::{Error, Result};

/// Bound probability `d(t)` and free probability `int c dz` at every step.
#[derive(Debug, Clone)]
pub struct BoundCurve {
    pub times: Vec<f64>,
    pub bound: Vec<f64>,
    pub free: Vec<f64>,
}

impl BoundCurve {
    /// Bound probability at the final time.
    pub fn final_bound(&self) -> f64 {
        *self.bound.last().unwrap()
    }

    /// Largest `|d + int c dz - 1|` over the run.
    pub fn max_mass_defect(&self) -> f64 {
        self.bound.iter().zip(&self.free).map(|(d, c)| (d + c - 1.0).abs()).fold(0.0, f64::max)
    }
}

/// Smallest step count that keeps the scheme positive for a given `n_z`.
pub fn required_time_steps(params: &PhysicalParams, z_max: f64, n_z: usize) -> usize {
    let dz = z_max / (n_z - 1) as f64;
    let rate = (2.0 * params.diffusion / (dz * dz) + 2.0 * params.kappa_a / dz).max(params.kappa_d);
    (params.horizon * rate).ceil() as usize
}

/// Unit impulse released at the surface at `t = 0`, diffusing on
/// `z in [0, z_max]` with a Robin flux `D dc/dz = kappa_a c - kappa_d d` at
/// `z = 0`, surface density `dd/dt = kappa_a c - kappa_d d` and `c = 0` at
/// `z_max`. The surface node is a ghost-node/half-cell discretization, so
/// the trapezoid mass plus `d` is conserved up to outflow at `z_max`.
pub fn pde_oracle(params: &PhysicalParams, z_max: f64, n_z: usize, n_t: usize) -> Result<BoundCurve> {
    params.validate()?;
    if n_z < 3 || n_t == 0 {
        return Err(Error::invalid(format!("need n_z >= 3 and n_t >= 1, got {n_z}, {n_t}")));
    }
    let reach = 6.0 * params.sigma_max();
    if !(z_max >= reach) {
        return Err(Error::invalid(format!("z_max = {z_max} below 6 sqrt(2DT) = {reach}")));
    }
    let required = required_time_steps(params, z_max, n_z);
    if n_t < required {
        return Err(Error::Unstable { required_steps: required, given_steps: n_t });
    }
    let dz = z_max / (n_z - 1) as f64;
    let dt = params.horizon / n_t as f64;
    let r = params.diffusion * dt / (dz * dz);
    let (ka, kd) = (params.kappa_a, params.kappa_d);

    let mut c = vec![0.0; n_z];
    let mut next = vec![0.0; n_z];
    c[0] = 2.0 / dz;
    let mut d = 0.0;
    let free_mass = |c: &[f64]| dz * (0.5 * c[0] + c[1..n_z - 1].iter().sum::<f64>() + 0.5 * c[n_z - 1]);

    let mut curve = BoundCurve {
        times: Vec::with_capacity(n_t + 1),
        bound: Vec::with_capacity(n_t + 1),
        free: Vec::with_capacity(n_t + 1),
    };
    curve.times.push(0.0);
    curve.bound.push(d);
    curve.free.push(free_mass(&c));
    for step in 1..=n_t {
        let exchange = ka * c[0] - kd * d;
        next[0] = c[0] + 2.0 * r * (c[1] - c[0]) - 2.0 * dt * exchange / dz;
        for i in 1..n_z - 1 {
            next[i] = c[i] + r * (c[i + 1] - 2.0 * c[i] + c[i - 1]);
        }
        next[n_z - 1] = 0.0;
        d += dt * exchange;
        std::mem::swap(&mut c, &mut next);
        curve.times.push(step as f64 * dt);
        curve.bound.push(d);
        curve.free.push(free_mass(&c));
    }
    Ok(curve)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::physics::phi::bound_fraction_no_desorption;

    fn params(kappa_a: f64, kappa_d: f64) -> PhysicalParams {
        PhysicalParams {
            kappa_a,
            kappa_d,
            diffusion: 1e-10,
            horizon: 600.0,
            pixel_pitch: 1e-5,
            psf_sigma: 0.0,
        }
    }

    fn run(p: &PhysicalParams, n_z: usize) -> BoundCurve {
        let z_max = 6.0 * p.sigma_max();
        let n_t = required_time_steps(p, z_max, n_z);
        pde_oracle(p, z_max, n_z, n_t).unwrap()
    }

    #[test]
    fn no_adsorption_never_binds() {
        let c = run(&params(0.0, 0.0), 200);
        assert!(c.bound.iter().all(|&d| d == 0.0));
    }

    #[test]
    fn mass_is_conserved() {
        let c = run(&params(1e-6, 1e-3), 300);
        assert!(c.max_mass_defect() < 1e-3, "{}", c.max_mass_defect());
    }

    #[test]
    fn instability_is_reported() {
        let p = params(1e-6, 0.0);
        let z = 6.0 * p.sigma_max();
        match pde_oracle(&p, z, 400, 10) {
            Err(Error::Unstable { required_steps, given_steps }) => {
                assert_eq!(given_steps, 10);
                assert_eq!(required_steps, required_time_steps(&p, z, 400));
            }
            other => panic!("expected instability, got {other:?}"),
        }
        assert!(pde_oracle(&p, 0.1 * z, 400, 100_000).is_err());
    }

    #[test]
    fn converges_to_closed_form_without_desorption() {
        let p = params(1e-6, 0.0);
        let want = bound_fraction_no_desorption(p.horizon, &p);
        let coarse = (run(&p, 200).final_bound() - want).abs();
        let fine = (run(&p, 800).final_bound() - want).abs();
        assert!(fine < coarse);
        assert!(fine < 0.01 * want, "fine error {fine}, want {want}");
    }
}
