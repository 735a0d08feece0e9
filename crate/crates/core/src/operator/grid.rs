use crate::error::{Error, Result};

/// Scale-bin boundaries in pixel units together with the set of bins the
/// group regularizer acts on.
#[derive(Debug, Clone, PartialEq)]
pub struct SigmaGrid {
    boundaries: Vec<f64>,
    support: Vec<bool>,
}

impl SigmaGrid {
    /// `boundaries` must start at 0 and increase strictly. `support` holds
    /// 1-based bin indices; `None` selects every bin.
    pub fn new(boundaries: Vec<f64>, support: Option<&[usize]>) -> Result<Self> {
        if boundaries.len() < 2 {
            return Err(Error::invalid("sigma grid needs at least two boundaries (K >= 1)"));
        }
        if boundaries[0] != 0.0 {
            return Err(Error::invalid(format!(
                "first sigma boundary must be 0, got {}",
                boundaries[0]
            )));
        }
        for w in boundaries.windows(2) {
            if !(w[1] > w[0]) || !w[1].is_finite() {
                return Err(Error::invalid(format!(
                    "sigma boundaries must increase strictly: {} then {}",
                    w[0], w[1]
                )));
            }
        }
        let k = boundaries.len() - 1;
        let support = match support {
            None => vec![true; k],
            Some(idx) => {
                let mut mask = vec![false; k];
                for &i in idx {
                    if i == 0 || i > k {
                        return Err(Error::invalid(format!("support index {i} outside 1..={k}")));
                    }
                    mask[i - 1] = true;
                }
                mask
            }
        };
        if !support.iter().any(|&s| s) {
            return Err(Error::invalid("regularizer support set must be non-empty"));
        }
        Ok(SigmaGrid { boundaries, support })
    }

    /// Accepts a boundary list whose first entry may be positive (as in
    /// `{2, 15, 20, ...}`); a leading 0 is inserted so that the first bin
    /// covers the near-Dirac scales. Support indices refer to the final grid.
    pub fn with_leading_zero(mut boundaries: Vec<f64>, support: Option<&[usize]>) -> Result<Self> {
        if boundaries.first().is_some_and(|&b| b > 0.0) {
            boundaries.insert(0, 0.0);
        }
        Self::new(boundaries, support)
    }

    /// Same grid shape, boundaries multiplied so the last equals `sigma_max`.
    pub fn scaled_to(&self, sigma_max: f64) -> Result<Self> {
        if !(sigma_max > 0.0) {
            return Err(Error::invalid("sigma_max must be positive"));
        }
        let f = sigma_max / self.sigma_max();
        let mut boundaries: Vec<f64> = self.boundaries.iter().map(|b| b * f).collect();
        *boundaries.last_mut().unwrap() = sigma_max;
        Ok(SigmaGrid { boundaries, support: self.support.clone() })
    }

    pub fn boundaries(&self) -> &[f64] {
        &self.boundaries
    }

    /// Number of bins K.
    pub fn len(&self) -> usize {
        self.boundaries.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn sigma_max(&self) -> f64 {
        *self.boundaries.last().unwrap()
    }

    /// Bin `k` (0-based) as `(lower, upper)`.
    pub fn bin(&self, k: usize) -> (f64, f64) {
        (self.boundaries[k], self.boundaries[k + 1])
    }

    pub fn width(&self, k: usize) -> f64 {
        self.boundaries[k + 1] - self.boundaries[k]
    }

    pub fn widths(&self) -> Vec<f64> {
        self.boundaries.windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// Whether bin `k` (0-based) is in the regularizer support.
    pub fn in_support(&self, k: usize) -> bool {
        self.support[k]
    }

    pub fn support_mask(&self) -> &[bool] {
        &self.support
    }

    /// 1-based indices of the support set.
    pub fn support_indices(&self) -> Vec<usize> {
        self.support
            .iter()
            .enumerate()
            .filter_map(|(i, &s)| s.then_some(i + 1))
            .collect()
    }

    pub fn covers_all_bins(&self) -> bool {
        self.support.iter().all(|&s| s)
    }
}
