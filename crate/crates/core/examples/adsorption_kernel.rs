//! Time-to-adsorption density with and without desorption, checked against
//! a finite-difference solution of the diffusion PDE.

use invdiff::physics::{bound_fraction_no_desorption, pde_oracle, phi_general, required_time_steps, PhysicalParams};

fn main() -> invdiff::Result<()> {
    let base = PhysicalParams {
        kappa_a: 1e-6,
        kappa_d: 0.0,
        diffusion: 1e-10,
        horizon: 3600.0,
        pixel_pitch: 7e-5,
        psf_sigma: 0.0,
    };
    println!("sqrt(2DT) = {:.3e} m = {:.2} px", base.sigma_max(), base.sigma_max_pixels());
    println!("closed-form bound fraction at T: {:.8}", bound_fraction_no_desorption(base.horizon, &base));

    println!("\n{:>10} {:>6} {:>14} {:>14} {:>10}", "kappa_d", "J", "table", "PDE", "rel diff");
    for kd in [0.0, 1e-4, 1e-3, 5e-3] {
        let p = PhysicalParams { kappa_d: kd, ..base };
        let tab = phi_general(&p, 2048, 1e-6)?;
        let z_max = 6.0 * p.sigma_max();
        let n_z = 800;
        let curve = pde_oracle(&p, z_max, n_z, required_time_steps(&p, z_max, n_z))?;
        let b = tab.bound_fraction(p.horizon);
        let pde = curve.final_bound();
        println!("{kd:>10.0e} {:>6} {b:>14.8} {pde:>14.8} {:>10.2e}", tab.j_max(), (b - pde).abs() / pde);
    }

    let p = PhysicalParams { kappa_d: 1e-3, ..base };
    let tab = phi_general(&p, 512, 1e-6)?;
    println!("\nphi(tau, T) at kappa_d = 1e-3");
    for i in [0, 1, 4, 16, 64, 256, 511] {
        println!("  tau {:>9.2} s  phi {:.6e}", tab.tau(i), tab.value_at(i, p.horizon));
    }
    Ok(())
}
