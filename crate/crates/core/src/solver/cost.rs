use ndarray::{Array3, Axis};

use crate::error::Result;
use crate::operator::{DiffusionOperator, KernelBank, Observation, PsdrTensor};

/// Objective value split into its data and regularizer parts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cost {
    /// `data + lambda * reg`, or `+inf` for an infeasible point.
    pub total: f64,
    /// `sum w^2 (A a - d_obs)^2`
    pub data: f64,
    /// `sum_{m,n} ||a_{m,n,S}||_2` over the support bins `S`.
    pub reg: f64,
}

/// Sum over pixels of the Euclidean norm of the support bins.
pub fn group_norm(a: &Array3<f64>, support: &[bool]) -> f64 {
    a.lanes(Axis(2))
        .into_iter()
        .map(|lane| {
            lane.iter().zip(support).filter(|(_, &s)| s).map(|(x, _)| x * x).sum::<f64>().sqrt()
        })
        .sum()
}

pub(crate) fn assemble(data: f64, reg: f64, lambda: f64, feasible: bool) -> Cost {
    let total = if feasible { data + lambda * reg } else { f64::INFINITY };
    Cost { total, data, reg }
}

/// Objective of the discretized problem at `a` for weight `lambda`.
pub fn cost(a: &PsdrTensor, obs: &Observation, bank: &KernelBank, lambda: f64) -> Result<Cost> {
    let (m, n, _) = a.dims();
    let op = DiffusionOperator::new(bank, m, n, Default::default())?;
    let data = op.weighted_residual_norm_sq(a, obs)?;
    let reg = group_norm(a.data(), bank.grid().support_mask());
    Ok(assemble(data, reg, lambda, a.is_nonnegative()))
}

/// Gradient of the data term, `2 A*(A a - d_obs)`.
pub fn grad_data(a: &Array3<f64>, obs: &Observation, bank: &KernelBank) -> Result<Array3<f64>> {
    let (m, n, _) = a.dim();
    let op = DiffusionOperator::new(bank, m, n, Default::default())?;
    grad_with(&op, a, obs)
}

pub(crate) fn grad_with(op: &DiffusionOperator<'_>, a: &Array3<f64>, obs: &Observation) -> Result<Array3<f64>> {
    let mut r = op.apply(a)?;
    r -= obs.data();
    let mut g = op.adjoint(&r, obs)?;
    g.mapv_inplace(|v| 2.0 * v);
    Ok(g)
}
