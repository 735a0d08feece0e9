use ndarray::{Array2, Array3, ArrayView2, Axis, Zip};
use rustfft::num_complex::Complex64;

use super::conv::{convolve_direct, multiply_accumulate, ConvMethod, FourierPlan, Spectrum};
use super::kernels::KernelBank;
use super::tensor::{Observation, PsdrTensor};
use crate::error::{Error, Result};

/// The discretized diffusion operator for one image size, with kernel
/// spectra cached for the transform-domain path.
#[derive(Debug)]
pub struct DiffusionOperator<'a> {
    bank: &'a KernelBank,
    rows: usize,
    cols: usize,
    plan: Option<FourierPlan>,
    spectra: Vec<Option<Spectrum>>,
}

impl<'a> DiffusionOperator<'a> {
    pub fn new(bank: &'a KernelBank, rows: usize, cols: usize, method: ConvMethod) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::invalid("image dimensions must be positive"));
        }
        let fourier: Vec<bool> =
            bank.kernels().iter().map(|g| method.uses_fourier(g.radius())).collect();
        let max_r = bank
            .kernels()
            .iter()
            .zip(&fourier)
            .filter(|(_, &f)| f)
            .map(|(g, _)| g.radius())
            .max();
        let plan = max_r.map(|r| FourierPlan::new(rows, cols, r));
        let spectra = bank
            .kernels()
            .iter()
            .zip(&fourier)
            .map(|(g, &f)| {
                if f {
                    Some(plan.as_ref().unwrap().kernel_spectrum(g))
                } else {
                    None
                }
            })
            .collect();
        Ok(DiffusionOperator { bank, rows, cols, plan, spectra })
    }

    pub fn bank(&self) -> &KernelBank {
        self.bank
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.rows, self.cols, self.bank.len())
    }

    fn check_tensor(&self, d: (usize, usize, usize)) -> Result<()> {
        if d != self.dims() {
            return Err(Error::DimensionMismatch {
                expected: vec![self.rows, self.cols, self.bank.len()],
                actual: vec![d.0, d.1, d.2],
            });
        }
        Ok(())
    }

    fn check_image(&self, dim: (usize, usize)) -> Result<()> {
        if dim != (self.rows, self.cols) {
            return Err(Error::DimensionMismatch {
                expected: vec![self.rows, self.cols],
                actual: vec![dim.0, dim.1],
            });
        }
        Ok(())
    }

    /// `sum_k g_k (*) a_k`
    pub fn forward(&self, a: &PsdrTensor) -> Result<Array2<f64>> {
        self.apply(a.data())
    }

    /// [`forward`](Self::forward) on a tensor of any sign.
    pub fn apply(&self, a: &Array3<f64>) -> Result<Array2<f64>> {
        self.check_tensor(a.dim())?;
        let mut out = Array2::<f64>::zeros((self.rows, self.cols));
        let mut acc: Option<Spectrum> = None;
        for (k, spec) in self.spectra.iter().enumerate() {
            let slice = a.index_axis(Axis(2), k);
            if slice.iter().all(|&v| v == 0.0) {
                continue;
            }
            match spec {
                Some(g) => {
                    let plan = self.plan.as_ref().unwrap();
                    let x = plan.image_spectrum(slice);
                    let acc = acc.get_or_insert_with(|| vec![Complex64::new(0.0, 0.0); x.len()]);
                    multiply_accumulate(acc, &x, g);
                }
                None => out += &convolve_direct(slice, self.bank.kernel(k)),
            }
        }
        if let Some(acc) = acc {
            out += &self.plan.as_ref().unwrap().inverse(acc);
        }
        Ok(out)
    }

    /// Per-bin blur of an image, `g_k (*) x` for every `k`, without weights
    /// or mask.
    fn blur_all(&self, x: ArrayView2<'_, f64>) -> Array3<f64> {
        let mut out = Array3::<f64>::zeros((self.rows, self.cols, self.bank.len()));
        let x_spec = self.plan.as_ref().map(|p| p.image_spectrum(x));
        for (k, spec) in self.spectra.iter().enumerate() {
            let y = match spec {
                Some(g) => {
                    let plan = self.plan.as_ref().unwrap();
                    let mut s = x_spec.as_ref().unwrap().clone();
                    super::conv::multiply_into(&mut s, g);
                    plan.inverse(s)
                }
                None => convolve_direct(x, self.bank.kernel(k)),
            };
            out.index_axis_mut(Axis(2), k).assign(&y);
        }
        out
    }

    /// `mu . (g_k (*) [w^2 . d])` for every `k`; the adjoint of
    /// [`forward`](Self::forward) with respect to the `w`-weighted image
    /// inner product, on tensors supported inside the mask.
    pub fn adjoint(&self, d: &Array2<f64>, obs: &Observation) -> Result<Array3<f64>> {
        self.check_image(d.dim())?;
        self.check_image(obs.dims())?;
        let mut wd = d.clone();
        Zip::from(&mut wd).and(obs.weights()).for_each(|v, w| *v *= w * w);
        let mut out = self.blur_all(wd.view());
        for (mut lane, &keep) in out.lanes_mut(Axis(2)).into_iter().zip(obs.mask().iter()) {
            if !keep {
                lane.fill(0.0);
            }
        }
        Ok(out)
    }

    /// `A a - d_obs`
    pub fn residual(&self, a: &PsdrTensor, obs: &Observation) -> Result<Array2<f64>> {
        self.check_image(obs.dims())?;
        let mut r = self.forward(a)?;
        r -= obs.data();
        Ok(r)
    }

    /// `sum w^2 (A a - d_obs)^2`
    pub fn weighted_residual_norm_sq(&self, a: &PsdrTensor, obs: &Observation) -> Result<f64> {
        let r = self.residual(a, obs)?;
        Ok(obs.weighted_dot(&r, &r))
    }

    /// Largest singular value of the weighted, masked operator by power
    /// iteration on `A* A`, started from the mask indicator. The Rayleigh
    /// quotients of the iterates are non-decreasing; the largest is kept.
    pub fn op_norm_estimate(&self, obs: &Observation, iters: usize) -> Result<f64> {
        Ok(self.power_iteration(obs, iters)?.last().copied().unwrap_or(0.0))
    }

    /// Running norm estimates, one per iteration.
    pub fn power_iteration(&self, obs: &Observation, iters: usize) -> Result<Vec<f64>> {
        if iters == 0 {
            return Err(Error::invalid("power iteration needs at least one iteration"));
        }
        self.check_image(obs.dims())?;
        let k = self.bank.len();
        let mut v = Array3::<f64>::zeros((self.rows, self.cols, k));
        for (mut lane, &keep) in v.lanes_mut(Axis(2)).into_iter().zip(obs.mask().iter()) {
            if keep {
                lane.fill(1.0);
            }
        }
        let mut history = Vec::with_capacity(iters);
        let mut best = 0.0f64;
        for _ in 0..iters {
            let nv = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if nv == 0.0 {
                history.push(best);
                continue;
            }
            v.mapv_inplace(|x| x / nv);
            let av = self.apply(&v)?;
            let rayleigh = obs.weighted_dot(&av, &av);
            best = best.max(rayleigh.max(0.0).sqrt());
            history.push(best);
            v = self.adjoint(&av, obs)?;
        }
        Ok(history)
    }
}

/// `sum_k g_k (*) a_k` with an automatically chosen convolution engine.
pub fn forward(a: &PsdrTensor, bank: &KernelBank) -> Result<Array2<f64>> {
    let (m, n, _) = a.dims();
    DiffusionOperator::new(bank, m, n, ConvMethod::Auto)?.forward(a)
}

/// `mu . (g_k (*) [w^2 . d])` for every bin.
pub fn adjoint(d: &Array2<f64>, obs: &Observation, bank: &KernelBank) -> Result<Array3<f64>> {
    let (m, n) = d.dim();
    DiffusionOperator::new(bank, m, n, ConvMethod::Auto)?.adjoint(d, obs)
}

pub fn weighted_residual_norm_sq(a: &PsdrTensor, obs: &Observation, bank: &KernelBank) -> Result<f64> {
    let (m, n, _) = a.dims();
    DiffusionOperator::new(bank, m, n, ConvMethod::Auto)?.weighted_residual_norm_sq(a, obs)
}

pub fn op_norm_estimate(obs: &Observation, bank: &KernelBank, iters: usize) -> Result<f64> {
    if iters < 20 {
        return Err(Error::invalid(format!("power iteration needs >= 20 iterations, got {iters}")));
    }
    let (m, n) = obs.dims();
    DiffusionOperator::new(bank, m, n, ConvMethod::Auto)?.op_norm_estimate(obs, iters)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::{build_kernel_bank, SigmaGrid};

    fn bank() -> KernelBank {
        let grid = SigmaGrid::new(vec![0.0, 1.0, 3.0], None).unwrap();
        build_kernel_bank(&grid, 0.0, 8).unwrap()
    }

    #[test]
    fn zero_in_zero_out() {
        let bank = bank();
        let a = PsdrTensor::zeros(16, 16, 2);
        assert!(forward(&a, &bank).unwrap().iter().all(|&v| v == 0.0));
        let obs = Observation::uniform(Array2::zeros((16, 16))).unwrap();
        let z = adjoint(&Array2::zeros((16, 16)), &obs, &bank).unwrap();
        assert!(z.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn impulse_gives_centered_kernel() {
        let bank = bank();
        let mut a = PsdrTensor::zeros(40, 40, 2);
        a.data_mut()[[20, 19, 1]] = 1.0;
        let y = forward(&a, &bank).unwrap();
        let g = bank.kernel(1);
        let peak = g.at(0, 0);
        for m in 0..40i64 {
            for n in 0..40i64 {
                let want = g.at(m - 20, n - 19);
                assert!((y[[m as usize, n as usize]] - want).abs() < 1e-14 * peak);
            }
        }
    }

    #[test]
    fn mask_annihilates_adjoint() {
        let bank = bank();
        let d = Array2::from_elem((12, 12), 1.0);
        let obs = Observation::new(d.clone(), Array2::ones((12, 12)), Array2::from_elem((12, 12), false))
            .unwrap();
        let z = adjoint(&d, &obs, &bank).unwrap();
        assert!(z.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let bank = bank();
        let a = PsdrTensor::zeros(8, 8, 3);
        assert!(matches!(forward(&a, &bank), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn single_pixel_weight_residual() {
        let bank = bank();
        let mut d = Array2::zeros((10, 10));
        d[[3, 4]] = 2.0;
        d[[5, 5]] = 7.0;
        let mut w = Array2::zeros((10, 10));
        w[[3, 4]] = 3.0;
        let obs = Observation::new(d, w, Array2::from_elem((10, 10), true)).unwrap();
        let a = PsdrTensor::zeros(10, 10, 2);
        let v = weighted_residual_norm_sq(&a, &obs, &bank).unwrap();
        assert_eq!(v, 9.0 * 4.0);
    }
}
