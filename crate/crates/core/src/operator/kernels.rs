use ndarray::Array2;
use rayon::prelude::*;

use super::grid::SigmaGrid;
use crate::error::{Error, Result};
use crate::mathcore::omega_row;
use crate::mathcore::quadrature::GaussLegendre;

/// Default Gauss–Legendre order for the integral over each scale bin.
pub const DEFAULT_QUAD_ORDER: usize = 16;

/// One discrete kernel `g_k`, stored as a `(2R+1) x (2R+1)` array centred on
/// offset `(0, 0)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel {
    radius: usize,
    data: Array2<f64>,
}

impl Kernel {
    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn data(&self) -> &Array2<f64> {
        &self.data
    }

    /// Value at integer offset `(m, n)`; zero outside the stored support.
    pub fn at(&self, m: i64, n: i64) -> f64 {
        let r = self.radius as i64;
        if m.abs() > r || n.abs() > r {
            return 0.0;
        }
        self.data[[(m + r) as usize, (n + r) as usize]]
    }

    pub fn mass(&self) -> f64 {
        self.data.sum()
    }
}

/// Kernel truncation radius for a bin whose upper scale (PSF included) is
/// `sigma`: six standard deviations plus the two pixel boxes.
pub fn truncation_radius(sigma: f64) -> usize {
    (6.0 * sigma).ceil() as usize + 2
}

/// The `K` discrete convolution kernels of the diffusion operator.
/// Read-only after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelBank {
    grid: SigmaGrid,
    kernels: Vec<Kernel>,
    sigma_shift: f64,
    quad_order: usize,
}

impl KernelBank {
    pub fn grid(&self) -> &SigmaGrid {
        &self.grid
    }

    pub fn kernels(&self) -> &[Kernel] {
        &self.kernels
    }

    pub fn kernel(&self, k: usize) -> &Kernel {
        &self.kernels[k]
    }

    pub fn len(&self) -> usize {
        self.kernels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kernels.is_empty()
    }

    pub fn sigma_shift(&self) -> f64 {
        self.sigma_shift
    }

    pub fn quad_order(&self) -> usize {
        self.quad_order
    }

    pub fn max_radius(&self) -> usize {
        self.kernels.iter().map(Kernel::radius).max().unwrap_or(0)
    }
}

/// Builds `g_k[(m,n)] = 1/sqrt(D_k) * int_{bin k} omega_s(m) omega_s(n) ds`
/// with `s = sigma + psf_sigma`, by Gauss–Legendre quadrature over each bin.
/// Each quadrature node contributes one separable outer product.
pub fn build_kernel_bank(grid: &SigmaGrid, psf_sigma: f64, quad_order: usize) -> Result<KernelBank> {
    if !(psf_sigma >= 0.0) || !psf_sigma.is_finite() {
        return Err(Error::invalid(format!("PSF width must be finite and >= 0, got {psf_sigma}")));
    }
    if quad_order < 4 {
        return Err(Error::invalid(format!("quadrature order must be >= 4, got {quad_order}")));
    }
    let rule = GaussLegendre::new(quad_order);
    let kernels = (0..grid.len())
        .into_par_iter()
        .map(|k| {
            let (lo, hi) = grid.bin(k);
            let radius = truncation_radius(hi + psf_sigma);
            let side = 2 * radius + 1;
            let norm = 1.0 / (hi - lo).sqrt();
            let mut data = Array2::<f64>::zeros((side, side));
            let mut row = vec![0.0; side];
            for (s, w) in rule.mapped(lo, hi) {
                omega_row(s + psf_sigma, radius, &mut row);
                let wq = w * norm;
                // wq * (ri * rj) keeps the (m,n) <-> (n,m) symmetry bit-exact
                for (i, &ri) in row.iter().enumerate() {
                    if ri == 0.0 {
                        continue;
                    }
                    let mut out = data.row_mut(i);
                    for (o, &rj) in out.iter_mut().zip(&row) {
                        *o += wq * (ri * rj);
                    }
                }
            }
            Kernel { radius, data }
        })
        .collect();
    Ok(KernelBank { grid: grid.clone(), kernels, sigma_shift: psf_sigma, quad_order })
}
