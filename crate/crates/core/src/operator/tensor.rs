use ndarray::{Array2, Array3, ArrayView2, Axis};

use crate::error::{Error, Result};

/// Discretized post adsorption-desorption source density rate, `M x N x K`.
#[derive(Debug, Clone, PartialEq)]
pub struct PsdrTensor {
    data: Array3<f64>,
}

impl PsdrTensor {
    pub fn zeros(rows: usize, cols: usize, bins: usize) -> Self {
        PsdrTensor { data: Array3::zeros((rows, cols, bins)) }
    }

    /// Wraps a tensor after checking it is finite and non-negative.
    pub fn new(data: Array3<f64>) -> Result<Self> {
        if let Some(v) = data.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::invalid(format!("PSDR entries must be finite and >= 0, found {v}")));
        }
        Ok(PsdrTensor { data })
    }

    /// Wraps without the sign check, for outputs that are non-negative by
    /// construction.
    pub(crate) fn from_raw(data: Array3<f64>) -> Self {
        PsdrTensor { data }
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        self.data.dim()
    }

    pub fn data(&self) -> &Array3<f64> {
        &self.data
    }

    #[cfg(test)]
    pub(crate) fn data_mut(&mut self) -> &mut Array3<f64> {
        &mut self.data
    }

    pub fn into_inner(self) -> Array3<f64> {
        self.data
    }

    /// Scale slice `k` as an `M x N` view.
    pub fn slice(&self, k: usize) -> ArrayView2<'_, f64> {
        self.data.index_axis(Axis(2), k)
    }

    pub fn is_nonnegative(&self) -> bool {
        self.data.iter().all(|&v| v >= 0.0)
    }

    pub fn norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn dot(&self, other: &PsdrTensor) -> f64 {
        self.data.iter().zip(other.data.iter()).map(|(a, b)| a * b).sum()
    }
}

/// An observed image together with its pixel weights and source mask.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    data: Array2<f64>,
    weights: Array2<f64>,
    mask: Array2<bool>,
}

impl Observation {
    pub fn new(data: Array2<f64>, weights: Array2<f64>, mask: Array2<bool>) -> Result<Self> {
        let dim = data.dim();
        for d in [weights.dim(), mask.dim()] {
            if d != dim {
                return Err(Error::DimensionMismatch {
                    expected: vec![dim.0, dim.1],
                    actual: vec![d.0, d.1],
                });
            }
        }
        if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(Error::invalid("weights must be finite and >= 0"));
        }
        if weights.iter().all(|&w| w == 0.0) {
            return Err(Error::invalid("weights must not be identically zero"));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("observation contains non-finite values"));
        }
        Ok(Observation { data, weights, mask })
    }

    /// Unit weights and a full mask.
    pub fn uniform(data: Array2<f64>) -> Result<Self> {
        let dim = data.dim();
        Self::new(data, Array2::ones(dim), Array2::from_elem(dim, true))
    }

    pub fn dims(&self) -> (usize, usize) {
        self.data.dim()
    }

    pub fn data(&self) -> &Array2<f64> {
        &self.data
    }

    pub fn weights(&self) -> &Array2<f64> {
        &self.weights
    }

    pub fn mask(&self) -> &Array2<bool> {
        &self.mask
    }

    pub fn max_weight(&self) -> f64 {
        self.weights.iter().cloned().fold(0.0, f64::max)
    }

    /// Same weights and mask around a different image.
    pub fn with_data(&self, data: Array2<f64>) -> Result<Self> {
        Self::new(data, self.weights.clone(), self.mask.clone())
    }

    /// `sum w^2 x y`
    pub fn weighted_dot(&self, x: &Array2<f64>, y: &Array2<f64>) -> f64 {
        ndarray::Zip::from(&self.weights)
            .and(x)
            .and(y)
            .fold(0.0, |acc, w, a, b| acc + w * w * a * b)
    }
}
