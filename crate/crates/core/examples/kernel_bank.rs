//! Builds the scale-integrated kernel bank for a six-bin grid and checks the
//! mass identity and the operator norm bound.

use ndarray::Array2;
use invdiff::operator::{build_kernel_bank, ConvMethod, DiffusionOperator, Observation, SigmaGrid};

fn main() -> invdiff::Result<()> {
    let grid = SigmaGrid::with_leading_zero(vec![2.0, 15.0, 20.0, 30.0, 40.0, 50.0, 70.0], None)?.scaled_to(20.0)?;
    let bank = build_kernel_bank(&grid, 0.0, 16)?;
    println!("{:>3} {:>16} {:>7} {:>12} {:>12}", "k", "bin (px)", "radius", "mass", "sqrt(width)");
    for k in 0..bank.len() {
        let (lo, hi) = grid.bin(k);
        println!(
            "{k:>3} {:>7.2}..{:<7.2} {:>7} {:>12.8} {:>12.8}",
            lo,
            hi,
            bank.kernel(k).radius(),
            bank.kernel(k).mass(),
            grid.width(k).sqrt()
        );
    }

    let (m, n) = (96, 96);
    let op = DiffusionOperator::new(&bank, m, n, ConvMethod::Auto)?;
    let obs = Observation::uniform(Array2::zeros((m, n)))?;
    let history = op.power_iteration(&obs, 40)?;
    println!("\npower iteration: {:.6} after 10, {:.6} after 40", history[9], history[39]);
    println!("bound sqrt(sigma_max) max(w) = {:.6}", grid.sigma_max().sqrt() * obs.max_weight());
    Ok(())
}
