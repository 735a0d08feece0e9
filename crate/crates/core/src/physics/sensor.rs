//! Additive Gaussian noise, clipping and uniform quantization.

use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

/// Acquisition imperfections applied to a clean image.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensorConfig {
    /// Noise standard deviation relative to the image maximum.
    pub noise_sigma: f64,
    /// Quantizer depth; 0 disables quantization.
    pub bits: u32,
}

impl Default for SensorConfig {
    fn default() -> Self {
        SensorConfig { noise_sigma: 0.0, bits: 0 }
    }
}

impl SensorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.noise_sigma >= 0.0) || self.noise_sigma.is_infinite() {
            return Err(Error::invalid(format!("noise_sigma must be finite and >= 0, got {}", self.noise_sigma)));
        }
        if ![0, 8, 12, 16].contains(&self.bits) {
            return Err(Error::invalid(format!("bits must be one of 0, 8, 12, 16, got {}", self.bits)));
        }
        Ok(())
    }
}

/// Midrise quantizer on `[0, max]` with `2^bits` levels of width
/// `max / 2^bits`, reconstructing at level centres.
pub fn quantize(x: f64, max: f64, bits: u32) -> f64 {
    if bits == 0 || max <= 0.0 {
        return x;
    }
    let levels = (1u64 << bits) as f64;
    let width = max / levels;
    let idx = (x / width).floor().clamp(0.0, levels - 1.0);
    (idx + 0.5) * width
}

/// Adds i.i.d. `N(0, (noise_sigma * max)^2)` noise, clips to `[0, max]` and
/// quantizes. Pixels are visited in row-major order from a ChaCha8 stream
/// seeded with `seed`, so the output depends only on the inputs.
pub fn sensor_model(image: &Array2<f64>, cfg: &SensorConfig, seed: u64) -> Result<Array2<f64>> {
    cfg.validate()?;
    if image.iter().any(|&v| !(v >= 0.0) || v.is_infinite()) {
        return Err(Error::invalid("sensor input must be finite and >= 0"));
    }
    let max = image.iter().copied().fold(0.0, f64::max);
    if max == 0.0 {
        return Ok(image.clone());
    }
    let std = cfg.noise_sigma * max;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = image.clone();
    for v in out.iter_mut() {
        if std > 0.0 {
            let z: f64 = StandardNormal.sample(&mut rng);
            *v = (*v + std * z).clamp(0.0, max);
        }
        *v = quantize(*v, max, cfg.bits);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp(n: usize) -> Array2<f64> {
        Array2::from_shape_fn((n, n), |(i, j)| (i * n + j) as f64 / (n * n) as f64)
    }

    #[test]
    fn identity_without_noise_or_quantization() {
        let img = ramp(16);
        assert_eq!(sensor_model(&img, &SensorConfig::default(), 1).unwrap(), img);
    }

    #[test]
    fn quantization_error_is_half_a_level() {
        let img = ramp(64);
        let max = img.iter().copied().fold(0.0, f64::max);
        for bits in [8, 12, 16] {
            let out = sensor_model(&img, &SensorConfig { noise_sigma: 0.0, bits }, 0).unwrap();
            let half = 0.5 * max / (1u64 << bits) as f64;
            for (a, b) in img.iter().zip(out.iter()) {
                assert!((a - b).abs() <= half * (1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn rejects_unsupported_depth_and_negative_input() {
        let img = ramp(4);
        assert!(sensor_model(&img, &SensorConfig { noise_sigma: 0.0, bits: 10 }, 0).is_err());
        let mut neg = img.clone();
        neg[[0, 0]] = -1.0;
        assert!(sensor_model(&neg, &SensorConfig::default(), 0).is_err());
    }

    #[test]
    fn deterministic_given_seed() {
        let img = ramp(32);
        let cfg = SensorConfig { noise_sigma: 0.05, bits: 12 };
        let a = sensor_model(&img, &cfg, 7).unwrap();
        assert_eq!(a, sensor_model(&img, &cfg, 7).unwrap());
        assert_ne!(a, sensor_model(&img, &cfg, 8).unwrap());
    }

    #[test]
    fn empirical_noise_std() {
        // mid-gray image so clipping is negligible at 3% noise
        let mut img = Array2::from_elem((1000, 1000), 0.5);
        img[[0, 0]] = 1.0;
        let cfg = SensorConfig { noise_sigma: 0.03, bits: 0 };
        let out = sensor_model(&img, &cfg, 42).unwrap();
        let diffs: Vec<f64> = out.iter().zip(img.iter()).skip(1).map(|(a, b)| a - b).collect();
        let n = diffs.len() as f64;
        let mean = diffs.iter().sum::<f64>() / n;
        let var = diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1.0);
        assert!((var.sqrt() / 0.03 - 1.0).abs() < 0.01, "std {}", var.sqrt());
    }
}
