use crate::error::{Error, Result};

/// Physical constants of one assay.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalParams {
    /// Adsorption constant [m/s].
    pub kappa_a: f64,
    /// Desorption constant [1/s].
    pub kappa_d: f64,
    /// Diffusion constant [m^2/s].
    pub diffusion: f64,
    /// Experiment duration T [s].
    pub horizon: f64,
    /// Pixel side length [m].
    pub pixel_pitch: f64,
    /// Optical PSF standard deviation [pixels].
    pub psf_sigma: f64,
}

impl PhysicalParams {
    pub fn validate(&self) -> Result<()> {
        let check = |name: &str, v: f64, strict: bool| -> Result<()> {
            let ok = v.is_finite() && if strict { v > 0.0 } else { v >= 0.0 };
            if ok {
                Ok(())
            } else {
                let rel = if strict { "> 0" } else { ">= 0" };
                Err(Error::invalid(format!("{name} must be finite and {rel}, got {v}")))
            }
        };
        check("kappa_a", self.kappa_a, false)?;
        check("kappa_d", self.kappa_d, false)?;
        check("diffusion", self.diffusion, true)?;
        check("horizon", self.horizon, true)?;
        check("pixel_pitch", self.pixel_pitch, true)?;
        check("psf_sigma", self.psf_sigma, false)
    }

    /// Largest diffusion scale `sqrt(2 D T)` [m].
    pub fn sigma_max(&self) -> f64 {
        (2.0 * self.diffusion * self.horizon).sqrt()
    }

    /// Largest diffusion scale in pixels.
    pub fn sigma_max_pixels(&self) -> f64 {
        self.sigma_max() / self.pixel_pitch
    }

    /// Free-motion time corresponding to a scale in pixels, `(s * pitch)^2 / 2D`.
    pub fn tau_of_sigma_pixels(&self, sigma: f64) -> f64 {
        let s = sigma * self.pixel_pitch;
        s * s / (2.0 * self.diffusion)
    }

    /// Mean number of desorption events over the experiment, `kappa_d T`.
    pub fn desorption_mean(&self) -> f64 {
        self.kappa_d * self.horizon
    }
}
