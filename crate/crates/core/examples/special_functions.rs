//! Scaled complementary error function, pixel-integrated Gaussian weights
//! and Poisson quantiles.

use invdiff::mathcore::{erfc, erfcx, omega, poisson_cdf, poisson_quantile};

fn main() -> invdiff::Result<()> {
    println!("{:>8} {:>24} {:>24}", "x", "erfcx(x)", "exp(x^2) erfc(x)");
    for x in [-2.0f64, 0.0, 0.5, 3.0, 10.0, 30.0] {
        let naive = (x * x).exp() * erfc(x)?;
        println!("{x:>8} {:>24.16e} {naive:>24.16e}", erfcx(x)?);
    }

    println!("\nomega(sigma, m) for m = 0..4");
    for sigma in [0.0, 0.5, 2.0, 8.0] {
        let w: Vec<String> = (0..5).map(|m| omega(sigma, m).map(|v| format!("{v:.6}"))).collect::<Result<_, _>>()?;
        let total: f64 = (-100..=100).map(|m| omega(sigma, m).unwrap()).sum();
        println!("sigma {sigma:>4}: {}  (sum over m {total:.15})", w.join(" "));
    }

    println!("\nPoisson quantiles");
    for lambda in [0.5, 5.0, 50.0] {
        let q = poisson_quantile(0.999, lambda)?;
        println!("lambda {lambda:>5}: q_0.999 = {q:>3}, cdf(q) = {:.6}", poisson_cdf(q, lambda)?);
    }
    Ok(())
}
