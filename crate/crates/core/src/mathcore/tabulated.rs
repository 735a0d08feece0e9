use crate::error::{Error, Result};

/// A function sampled on a uniform grid `origin_offset + i * step`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tabulated1D {
    values: Vec<f64>,
    step: f64,
    origin_offset: f64,
}

impl Tabulated1D {
    pub fn new(values: Vec<f64>, step: f64, origin_offset: f64) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("tabulated function needs at least one sample"));
        }
        if !(step > 0.0) || !step.is_finite() {
            return Err(Error::invalid(format!("grid step must be positive, got {step}")));
        }
        if !origin_offset.is_finite() {
            return Err(Error::invalid("grid origin must be finite"));
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("tabulated value {bad} is not finite")));
        }
        Ok(Tabulated1D { values, step, origin_offset })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn origin_offset(&self) -> f64 {
        self.origin_offset
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Location of sample `i`.
    pub fn abscissa(&self, i: usize) -> f64 {
        self.origin_offset + i as f64 * self.step
    }

    /// Riemann mass `step * sum(values)`.
    pub fn mass(&self) -> f64 {
        self.step * self.values.iter().sum::<f64>()
    }

    /// Step-scaled discrete convolution approximating the continuous one.
    /// Both operands must share the grid step.
    pub fn convolve(&self, other: &Tabulated1D) -> Result<Tabulated1D> {
        self.convolve_truncated(other, usize::MAX)
    }

    /// As [`convolve`](Self::convolve), keeping only the first `max_len`
    /// output samples.
    pub fn convolve_truncated(&self, other: &Tabulated1D, max_len: usize) -> Result<Tabulated1D> {
        if (self.step - other.step).abs() > 1e-12 * self.step {
            return Err(Error::invalid(format!(
                "grid steps differ: {} vs {}",
                self.step, other.step
            )));
        }
        let full = self.len() + other.len() - 1;
        let n = full.min(max_len).max(1);
        let values = causal_convolve(&self.values, &other.values, n, self.step);
        Ok(Tabulated1D {
            values,
            step: self.step,
            origin_offset: self.origin_offset + other.origin_offset,
        })
    }
}

/// `out[i] = step * sum_{l} a[l] b[i - l]` for `i < n`.
pub(crate) fn causal_convolve(a: &[f64], b: &[f64], n: usize, step: f64) -> Vec<f64> {
    let mut out = vec![0.0; n];
    for (i, o) in out.iter_mut().enumerate() {
        let lo = i.saturating_sub(b.len() - 1);
        let hi = i.min(a.len() - 1);
        if lo > hi {
            continue;
        }
        let mut s = 0.0;
        for l in lo..=hi {
            s += a[l] * b[i - l];
        }
        *o = s * step;
    }
    out
}

/// `j`-th convolutional power of a tabulated function, on the same step.
/// The output has `j * (len - 1) + 1` samples and origin `j * origin_offset`.
pub fn conv_power(phi: &Tabulated1D, j: usize) -> Result<Tabulated1D> {
    if j == 0 {
        return Err(Error::invalid("convolutional power must be >= 1"));
    }
    let mut acc = phi.clone();
    for _ in 1..j {
        acc = acc.convolve(phi)?;
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_grids() {
        assert!(Tabulated1D::new(vec![], 1.0, 0.0).is_err());
        assert!(Tabulated1D::new(vec![1.0], 0.0, 0.0).is_err());
        assert!(Tabulated1D::new(vec![f64::NAN], 1.0, 0.0).is_err());
    }

    #[test]
    fn first_power_is_identity() {
        let f = Tabulated1D::new(vec![0.5, 1.0, 0.25], 0.1, 0.05).unwrap();
        assert_eq!(conv_power(&f, 1).unwrap(), f);
        assert!(conv_power(&f, 0).is_err());
    }

    #[test]
    fn masses_multiply() {
        let f = Tabulated1D::new(vec![0.3, 1.2, 0.7, 0.1, 0.05], 0.2, 0.1).unwrap();
        for j in 1..6 {
            let p = conv_power(&f, j).unwrap();
            assert_eq!(p.len(), j * (f.len() - 1) + 1);
            assert!((p.origin_offset() - j as f64 * 0.1).abs() < 1e-15);
            let want = f.mass().powi(j as i32);
            assert!((p.mass() - want).abs() < 1e-13 * want, "j={j}");
        }
    }

    #[test]
    fn box_squared_is_hat() {
        // unit box of width 1 sampled at step 0.1
        let n = 10;
        let f = Tabulated1D::new(vec![1.0; n], 0.1, 0.0).unwrap();
        let hat = conv_power(&f, 2).unwrap();
        for (i, &v) in hat.values().iter().enumerate() {
            let want = 0.1 * ((i + 1).min(2 * n - 1 - i)) as f64;
            assert!((v - want).abs() < 1e-12, "i={i} v={v} want={want}");
        }
    }

    #[test]
    fn power_composes_pairwise() {
        let f = Tabulated1D::new(vec![0.2, 0.9, 0.4, 0.3], 0.5, 0.25).unwrap();
        let p4 = conv_power(&f, 4).unwrap();
        let p2 = conv_power(&f, 2).unwrap();
        let p22 = p2.convolve(&p2).unwrap();
        for (a, b) in p4.values().iter().zip(p22.values()) {
            assert!((a - b).abs() < 1e-13);
        }
    }
}
