//! Special functions, Poisson tools and discrete convolution powers.

mod poisson;
pub mod quadrature;
mod special;
mod tabulated;

pub use poisson::{poisson_cdf, poisson_pmf, poisson_quantile};
pub(crate) use poisson::ln_pmf;
pub use special::{erfc, erfcx, normal_cdf, normal_pdf, omega, psi};
pub(crate) use special::{erfcx_unchecked, omega_row};
pub use tabulated::{conv_power, Tabulated1D};
