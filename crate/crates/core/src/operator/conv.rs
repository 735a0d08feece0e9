//! Zero-padded linear 2D convolution with even kernels, cropped back to the
//! input size. Two independent engines: direct summation and FFT.

use std::sync::Arc;

use ndarray::{Array2, ArrayView2};
use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::kernels::Kernel;

/// Kernels up to this radius are applied by direct summation when the
/// engine is chosen automatically.
pub const DIRECT_MAX_RADIUS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ConvMethod {
    /// Direct for small kernels, FFT for large ones.
    #[default]
    Auto,
    Direct,
    Fourier,
}

impl ConvMethod {
    pub(crate) fn uses_fourier(self, radius: usize) -> bool {
        match self {
            ConvMethod::Auto => radius > DIRECT_MAX_RADIUS,
            ConvMethod::Direct => false,
            ConvMethod::Fourier => true,
        }
    }
}

/// `out[m,n] = sum_{i,j} g[i,j] * x[m-i, n-j]` with zero padding outside `x`.
pub fn convolve_direct(x: ArrayView2<'_, f64>, kernel: &Kernel) -> Array2<f64> {
    let (rows, cols) = x.dim();
    let mut out = Array2::<f64>::zeros((rows, cols));
    let r = kernel.radius() as isize;
    let g = kernel.data();
    let x = x.as_standard_layout();
    let xs = x.as_slice().expect("standard layout");
    out.as_slice_mut()
        .expect("standard layout")
        .par_chunks_mut(cols)
        .enumerate()
        .for_each(|(m, out_row)| {
            for i in -r..=r {
                let src_m = m as isize - i;
                if src_m < 0 || src_m >= rows as isize {
                    continue;
                }
                let src = &xs[src_m as usize * cols..(src_m as usize + 1) * cols];
                let g_row = g.row((i + r) as usize);
                for j in -r..=r {
                    let w = g_row[(j + r) as usize];
                    if w == 0.0 {
                        continue;
                    }
                    // out[n] += w * src[n - j] for 0 <= n - j < cols
                    let (n_lo, n_hi) = if j >= 0 {
                        (j as usize, cols)
                    } else {
                        (0, (cols as isize + j).max(0) as usize)
                    };
                    if n_lo >= n_hi {
                        continue;
                    }
                    let s_lo = (n_lo as isize - j) as usize;
                    let len = n_hi - n_lo;
                    for (o, &s) in out_row[n_lo..n_hi].iter_mut().zip(&src[s_lo..s_lo + len]) {
                        *o += w * s;
                    }
                }
            }
        });
    out
}

/// Smallest integer `>= n` whose only prime factors are 2, 3, 5 and 7.
fn fast_len(n: usize) -> usize {
    let mut m = n.max(1);
    loop {
        let mut r = m;
        for p in [2, 3, 5, 7] {
            while r.is_multiple_of(p) {
                r /= p;
            }
        }
        if r == 1 {
            return m;
        }
        m += 1;
    }
}

/// FFT machinery for one image size and maximum kernel radius. Spectra are
/// kept in column-major (transposed) order, which is consistent between
/// images and kernels.
pub struct FourierPlan {
    rows: usize,
    cols: usize,
    pad_rows: usize,
    pad_cols: usize,
    fwd_rows: Arc<dyn Fft<f64>>,
    fwd_cols: Arc<dyn Fft<f64>>,
    inv_rows: Arc<dyn Fft<f64>>,
    inv_cols: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for FourierPlan {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FourierPlan")
            .field("rows", &self.rows)
            .field("cols", &self.cols)
            .field("pad_rows", &self.pad_rows)
            .field("pad_cols", &self.pad_cols)
            .finish()
    }
}

pub type Spectrum = Vec<Complex64>;

impl FourierPlan {
    pub fn new(rows: usize, cols: usize, max_radius: usize) -> Self {
        // offsets beyond the image extent never reach the cropped output
        let pad_rows = fast_len(rows + max_radius.min(rows.saturating_sub(1)));
        let pad_cols = fast_len(cols + max_radius.min(cols.saturating_sub(1)));
        let mut planner = FftPlanner::new();
        FourierPlan {
            rows,
            cols,
            pad_rows,
            pad_cols,
            fwd_rows: planner.plan_fft_forward(pad_cols),
            fwd_cols: planner.plan_fft_forward(pad_rows),
            inv_rows: planner.plan_fft_inverse(pad_cols),
            inv_cols: planner.plan_fft_inverse(pad_rows),
        }
    }

    pub fn padded_dims(&self) -> (usize, usize) {
        (self.pad_rows, self.pad_cols)
    }

    /// Spectrum of a buffer laid out row-major `pad_rows x pad_cols` whose
    /// rows at index `>= live_rows` are zero.
    fn transform(&self, mut buf: Vec<Complex64>, live_rows: usize) -> Spectrum {
        let (pr, pc) = (self.pad_rows, self.pad_cols);
        buf[..live_rows * pc]
            .par_chunks_mut(pc)
            .for_each(|row| self.fwd_rows.process(row));
        let mut t = transpose(&buf, pr, pc);
        t.par_chunks_mut(pr).for_each(|col| self.fwd_cols.process(col));
        t
    }

    pub fn image_spectrum(&self, x: ArrayView2<'_, f64>) -> Spectrum {
        debug_assert_eq!(x.dim(), (self.rows, self.cols));
        let pc = self.pad_cols;
        let mut buf = vec![Complex64::new(0.0, 0.0); self.pad_rows * pc];
        for (m, row) in x.outer_iter().enumerate() {
            for (n, &v) in row.iter().enumerate() {
                buf[m * pc + n] = Complex64::new(v, 0.0);
            }
        }
        self.transform(buf, self.rows)
    }

    /// Spectrum of a kernel wrapped around the origin. Offsets beyond the
    /// image extent are dropped since they cannot reach the cropped output.
    pub fn kernel_spectrum(&self, kernel: &Kernel) -> Spectrum {
        let (pr, pc) = (self.pad_rows, self.pad_cols);
        let r = kernel.radius() as i64;
        let rm = r.min(self.rows as i64 - 1);
        let rn = r.min(self.cols as i64 - 1);
        let mut buf = vec![Complex64::new(0.0, 0.0); pr * pc];
        for i in -rm..=rm {
            let pi = i.rem_euclid(pr as i64) as usize;
            for j in -rn..=rn {
                let pj = j.rem_euclid(pc as i64) as usize;
                buf[pi * pc + pj] = Complex64::new(kernel.at(i, j), 0.0);
            }
        }
        self.transform(buf, pr)
    }

    /// Inverse transform, normalised, cropped to the image size.
    pub fn inverse(&self, spec: Spectrum) -> Array2<f64> {
        let (pr, pc) = (self.pad_rows, self.pad_cols);
        let mut t = spec;
        t.par_chunks_mut(pr).for_each(|col| self.inv_cols.process(col));
        let mut buf = transpose(&t, pc, pr);
        buf[..self.rows * pc]
            .par_chunks_mut(pc)
            .for_each(|row| self.inv_rows.process(row));
        let scale = 1.0 / (pr * pc) as f64;
        Array2::from_shape_fn((self.rows, self.cols), |(m, n)| buf[m * pc + n].re * scale)
    }

    pub fn convolve(&self, x: ArrayView2<'_, f64>, kernel_spec: &Spectrum) -> Array2<f64> {
        let mut s = self.image_spectrum(x);
        multiply_into(&mut s, kernel_spec);
        self.inverse(s)
    }
}

pub(crate) fn multiply_into(acc: &mut [Complex64], other: &[Complex64]) {
    acc.par_iter_mut().zip(other.par_iter()).for_each(|(a, b)| *a *= *b);
}

/// `acc += x * y`
pub(crate) fn multiply_accumulate(acc: &mut [Complex64], x: &[Complex64], y: &[Complex64]) {
    acc.par_iter_mut()
        .zip(x.par_iter().zip(y.par_iter()))
        .for_each(|(a, (p, q))| *a += *p * *q);
}

fn transpose(src: &[Complex64], rows: usize, cols: usize) -> Vec<Complex64> {
    let mut dst = vec![Complex64::new(0.0, 0.0); src.len()];
    dst.par_chunks_mut(rows).enumerate().for_each(|(c, out)| {
        for (r, o) in out.iter_mut().enumerate() {
            *o = src[r * cols + c];
        }
    });
    dst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::{build_kernel_bank, SigmaGrid};

    #[test]
    fn fast_len_factors() {
        assert_eq!(fast_len(1), 1);
        assert_eq!(fast_len(11), 12);
        assert_eq!(fast_len(97), 98);
        assert_eq!(fast_len(128), 128);
    }

    #[test]
    fn direct_impulse_reproduces_kernel() {
        let grid = SigmaGrid::new(vec![0.0, 1.5], None).unwrap();
        let bank = build_kernel_bank(&grid, 0.0, 8).unwrap();
        let g = bank.kernel(0);
        let mut x = Array2::zeros((31, 29));
        x[[15, 14]] = 1.0;
        let y = convolve_direct(x.view(), g);
        for m in 0..31i64 {
            for n in 0..29i64 {
                assert_eq!(y[[m as usize, n as usize]], g.at(m - 15, n - 14));
            }
        }
    }

    #[test]
    fn fourier_matches_direct_on_rectangles() {
        let grid = SigmaGrid::new(vec![0.0, 3.0], None).unwrap();
        let bank = build_kernel_bank(&grid, 0.2, 8).unwrap();
        let g = bank.kernel(0);
        let x = Array2::from_shape_fn((13, 40), |(m, n)| ((m * 7 + n * 3) % 11) as f64 / 11.0);
        let plan = FourierPlan::new(13, 40, g.radius());
        let ks = plan.kernel_spectrum(g);
        let a = plan.convolve(x.view(), &ks);
        let b = convolve_direct(x.view(), g);
        let scale = b.iter().cloned().fold(0.0, f64::max);
        for (p, q) in a.iter().zip(b.iter()) {
            assert!((p - q).abs() < 1e-12 * scale);
        }
    }
}
