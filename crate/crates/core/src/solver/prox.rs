use ndarray::{Array3, Axis};

/// Proximal map of `x -> threshold * ||x_S||_2` plus the non-negativity
/// constraint, for one pixel's scale vector.
///
/// Coordinates outside `support` are projected onto `[0, inf)`. On
/// `support` the vector is projected and then shrunk towards 0 by
/// `threshold` in Euclidean norm.
pub fn prox_group_nonneg(v: &[f64], threshold: f64, support: &[bool]) -> Vec<f64> {
    let mut out = v.to_vec();
    prox_in_place(&mut out, threshold, support);
    out
}

pub(crate) fn prox_in_place(v: &mut [f64], threshold: f64, support: &[bool]) {
    debug_assert_eq!(v.len(), support.len());
    let mut norm_sq = 0.0;
    for (x, &s) in v.iter_mut().zip(support) {
        *x = x.max(0.0);
        if s {
            norm_sq += *x * *x;
        }
    }
    if threshold <= 0.0 {
        return;
    }
    let norm = norm_sq.sqrt();
    let scale = if norm > threshold { 1.0 - threshold / norm } else { 0.0 };
    for (x, &s) in v.iter_mut().zip(support) {
        if s {
            *x *= scale;
        }
    }
}

/// Applies [`prox_group_nonneg`] to every pixel of an `M x N x K` tensor.
pub(crate) fn prox_tensor(a: &mut Array3<f64>, threshold: f64, support: &[bool]) {
    for mut lane in a.lanes_mut(Axis(2)) {
        match lane.as_slice_mut() {
            Some(s) => prox_in_place(s, threshold, support),
            None => {
                let mut tmp = lane.to_vec();
                prox_in_place(&mut tmp, threshold, support);
                lane.iter_mut().zip(tmp).for_each(|(x, y)| *x = y);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nonpositive_input_maps_to_zero() {
        let out = prox_group_nonneg(&[-1.0, 0.0, -3.0], 0.5, &[true, false, true]);
        assert_eq!(out, vec![0.0, 0.0, 0.0]);
    }

    #[test]
    fn zero_threshold_is_projection() {
        let out = prox_group_nonneg(&[-1.0, 2.0, 3.0], 0.0, &[true, true, true]);
        assert_eq!(out, vec![0.0, 2.0, 3.0]);
    }

    #[test]
    fn shrinks_only_the_support() {
        let out = prox_group_nonneg(&[3.0, 4.0, 7.0], 2.5, &[true, true, false]);
        assert!((out[0] - 1.5).abs() < 1e-15 && (out[1] - 2.0).abs() < 1e-15);
        assert_eq!(out[2], 7.0);
        assert_eq!(prox_group_nonneg(&[3.0, 4.0], 5.0, &[true, true]), vec![0.0, 0.0]);
    }
}
