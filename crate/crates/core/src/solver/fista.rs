use std::fmt::Write as _;

use ndarray::{Array2, Array3, Axis, Zip};

use super::cost::{assemble, group_norm, Cost};
use super::prox::prox_tensor;
use crate::error::{Error, Result};
use crate::operator::{ConvMethod, DiffusionOperator, KernelBank, Observation, PsdrTensor};

/// Consecutive small relative cost changes needed to stop.
const STOP_WINDOW: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// Regularization weight.
    pub lambda: f64,
    pub max_iters: usize,
    /// Relative cost change below which an iteration counts as stalled.
    pub rel_tol: f64,
    /// Fraction of `1 / L` used as step size.
    pub step_safety: f64,
    /// Function-value restart of the momentum.
    pub restart: bool,
    /// Power iterations for the Lipschitz estimate.
    pub power_iters: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            lambda: 4000.0,
            max_iters: 500,
            rel_tol: 1e-6,
            step_safety: 0.95,
            restart: true,
            power_iters: 50,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0) || self.lambda.is_infinite() {
            return Err(Error::invalid(format!("lambda must be finite and >= 0, got {}", self.lambda)));
        }
        if self.max_iters == 0 {
            return Err(Error::invalid("max_iters must be positive"));
        }
        if !(self.rel_tol > 0.0) {
            return Err(Error::invalid(format!("rel_tol must be > 0, got {}", self.rel_tol)));
        }
        if !(self.step_safety > 0.0 && self.step_safety <= 1.0) {
            return Err(Error::invalid(format!("step_safety must lie in (0, 1], got {}", self.step_safety)));
        }
        if self.power_iters < 20 {
            return Err(Error::invalid(format!("power_iters must be >= 20, got {}", self.power_iters)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRecord {
    pub iter: usize,
    pub cost: f64,
    pub data: f64,
    pub reg: f64,
    pub step: f64,
    pub restart: bool,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SolveTrace {
    pub records: Vec<TraceRecord>,
    pub iterations: usize,
    pub converged: bool,
}

impl SolveTrace {
    /// CSV with header `iter,cost,data,reg,step,restart`; reals in shortest
    /// round-trip form.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("iter,cost,data,reg,step,restart\n");
        for r in &self.records {
            let _ = writeln!(s, "{},{:e},{:e},{:e},{:e},{}", r.iter, r.cost, r.data, r.reg, r.step, r.restart as u8);
        }
        s
    }

    /// Whether recorded costs never increase.
    pub fn is_monotone(&self) -> bool {
        self.records.windows(2).all(|w| w[1].cost <= w[0].cost)
    }
}

/// Refuses problems for which no minimizer is guaranteed: no
/// regularization, unobserved pixels and unpenalized bins together.
pub fn check_existence(obs: &Observation, bank: &KernelBank, lambda: f64) -> Result<()> {
    let some_unweighted = obs.weights().iter().any(|&w| w == 0.0);
    if lambda == 0.0 && some_unweighted && !bank.grid().covers_all_bins() {
        return Err(Error::IllPosed(
            "lambda = 0 with zero pixel weights and bins outside the regularizer support; \
             a minimizer is not guaranteed"
                .into(),
        ));
    }
    Ok(())
}

/// Smallest `lambda` for which `a = 0` is a minimizer when the regularizer
/// covers every bin: the largest group norm of `(2 A* d_obs)_+`. Useful as a
/// scale for `lambda`, since images carry an arbitrary intensity factor.
pub fn lambda_max(obs: &Observation, bank: &KernelBank) -> Result<f64> {
    let (m, n) = obs.dims();
    let op = DiffusionOperator::new(bank, m, n, ConvMethod::Auto)?;
    let g = op.adjoint(obs.data(), obs)?.mapv(|v| (2.0 * v).max(0.0));
    let support = bank.grid().support_mask();
    Ok(g.lanes(Axis(2))
        .into_iter()
        .map(|lane| lane.iter().zip(support).filter(|(_, &s)| s).map(|(v, _)| v * v).sum::<f64>().sqrt())
        .fold(0.0, f64::max))
}

/// Lipschitz constant of the data-term gradient, `2 ||A||^2`.
pub fn lipschitz(op: &DiffusionOperator<'_>, obs: &Observation, power_iters: usize) -> Result<f64> {
    let norm = op.op_norm_estimate(obs, power_iters)?;
    Ok(2.0 * norm * norm)
}

/// Accelerated proximal gradient solve of
/// `min_{a >= 0} ||A a - d_obs||_w^2 + lambda sum_{m,n} ||a_{m,n,S}||_2`.
pub fn fista_solve(
    obs: &Observation,
    bank: &KernelBank,
    cfg: &SolverConfig,
    init: Option<&PsdrTensor>,
) -> Result<(PsdrTensor, SolveTrace)> {
    let (m, n) = obs.dims();
    let op = DiffusionOperator::new(bank, m, n, ConvMethod::Auto)?;
    cfg.validate()?;
    let l = lipschitz(&op, obs, cfg.power_iters)?;
    fista_solve_with(&op, obs, cfg, init, l)
}

/// [`fista_solve`] on a prepared operator with a known Lipschitz constant.
pub fn fista_solve_with(
    op: &DiffusionOperator<'_>,
    obs: &Observation,
    cfg: &SolverConfig,
    init: Option<&PsdrTensor>,
    lipschitz: f64,
) -> Result<(PsdrTensor, SolveTrace)> {
    cfg.validate()?;
    let bank = op.bank();
    check_existence(obs, bank, cfg.lambda)?;
    let (m, n, k) = op.dims();
    if obs.dims() != (m, n) {
        return Err(Error::DimensionMismatch { expected: vec![m, n], actual: vec![obs.dims().0, obs.dims().1] });
    }
    let support = bank.grid().support_mask().to_vec();

    let mut x = match init {
        Some(a) => {
            if a.dims() != (m, n, k) {
                let d = a.dims();
                return Err(Error::DimensionMismatch { expected: vec![m, n, k], actual: vec![d.0, d.1, d.2] });
            }
            a.data().clone()
        }
        None => Array3::zeros((m, n, k)),
    };
    for (mut lane, &keep) in x.lanes_mut(Axis(2)).into_iter().zip(obs.mask().iter()) {
        if keep {
            lane.mapv_inplace(|v| v.max(0.0));
        } else {
            lane.fill(0.0);
        }
    }
    let mut trace = SolveTrace::default();
    if lipschitz == 0.0 {
        // A vanishes on the mask: only the regularizer acts, and 0 is optimal
        x.fill(0.0);
        let data = obs.weighted_dot(obs.data(), obs.data());
        trace.records.push(TraceRecord { iter: 1, cost: data, data, reg: 0.0, step: 0.0, restart: false });
        trace.iterations = 1;
        trace.converged = true;
        return Ok((PsdrTensor::from_raw(x), trace));
    }
    let step = cfg.step_safety / lipschitz;
    let threshold = step * cfg.lambda;

    let residual = |ax: &Array2<f64>| ax - obs.data();
    let evaluate = |x: &Array3<f64>, ax: &Array2<f64>| -> Cost {
        let r = residual(ax);
        assemble(obs.weighted_dot(&r, &r), group_norm(x, &support), cfg.lambda, true)
    };
    let gradient_step = |y: &Array3<f64>, ay: &Array2<f64>| -> Result<Array3<f64>> {
        let g = op.adjoint(&residual(ay), obs)?;
        let mut z = y.clone();
        Zip::from(&mut z).and(&g).for_each(|z, g| *z -= 2.0 * step * g);
        prox_tensor(&mut z, threshold, &support);
        Ok(z)
    };

    let mut ax = op.apply(&x)?;
    let mut f_prev = evaluate(&x, &ax).total;
    if !f_prev.is_finite() {
        return Err(Error::NonFinite { iteration: 0 });
    }
    let mut x_prev = x.clone();
    let mut ax_prev = ax.clone();
    let mut t = 1.0f64;
    let mut beta = 0.0;
    let mut stalled = 0;

    for iter in 1..=cfg.max_iters {
        // extrapolated point and its image, by linearity
        let (y, ay) = if beta == 0.0 {
            (x.clone(), ax.clone())
        } else {
            let y = &x + &((&x - &x_prev) * beta);
            let ay = &ax + &((&ax - &ax_prev) * beta);
            (y, ay)
        };
        let mut x_new = gradient_step(&y, &ay)?;
        let mut ax_new = op.apply(&x_new)?;
        let mut c = evaluate(&x_new, &ax_new);
        let mut restarted = false;
        if cfg.restart && beta != 0.0 && c.total > f_prev {
            restarted = true;
            t = 1.0;
            x_new = gradient_step(&x, &ax)?;
            ax_new = op.apply(&x_new)?;
            c = evaluate(&x_new, &ax_new);
        }
        if !c.total.is_finite() {
            return Err(Error::NonFinite { iteration: iter });
        }
        debug_assert!(x_new.iter().all(|&v| v >= 0.0));
        trace.records.push(TraceRecord { iter, cost: c.total, data: c.data, reg: c.reg, step, restart: restarted });
        trace.iterations = iter;

        let fixed_point = beta == 0.0 && x_new == x;
        let t_new = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        beta = (t - 1.0) / t_new;
        t = t_new;
        x_prev = std::mem::replace(&mut x, x_new);
        ax_prev = std::mem::replace(&mut ax, ax_new);

        if fixed_point {
            trace.converged = true;
            break;
        }
        let change = (f_prev - c.total).abs();
        stalled = if change <= cfg.rel_tol * f_prev.abs().max(f64::MIN_POSITIVE) { stalled + 1 } else { 0 };
        f_prev = c.total;
        if stalled >= STOP_WINDOW {
            trace.converged = true;
            break;
        }
    }
    Ok((PsdrTensor::from_raw(x), trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::{build_kernel_bank, SigmaGrid};

    fn bank() -> KernelBank {
        let grid = SigmaGrid::new(vec![0.0, 1.0, 2.5], None).unwrap();
        build_kernel_bank(&grid, 0.5, 8).unwrap()
    }

    #[test]
    fn zero_data_is_a_fixed_point() {
        let bank = bank();
        let obs = Observation::uniform(Array2::zeros((12, 12))).unwrap();
        let cfg = SolverConfig { lambda: 1.0, ..Default::default() };
        let (a, trace) = fista_solve(&obs, &bank, &cfg, None).unwrap();
        assert!(a.data().iter().all(|&v| v == 0.0));
        assert_eq!(trace.iterations, 1);
        assert!(trace.converged);
    }

    #[test]
    fn ill_posed_configuration_is_refused() {
        let grid = SigmaGrid::new(vec![0.0, 1.0, 2.5], Some(&[2])).unwrap();
        let bank = build_kernel_bank(&grid, 0.0, 8).unwrap();
        let mut w = Array2::ones((8, 8));
        w[[0, 0]] = 0.0;
        let obs = Observation::new(Array2::ones((8, 8)), w, Array2::from_elem((8, 8), true)).unwrap();
        let cfg = SolverConfig { lambda: 0.0, ..Default::default() };
        assert!(matches!(fista_solve(&obs, &bank, &cfg, None), Err(Error::IllPosed(_))));
        let cfg = SolverConfig { lambda: 0.1, ..Default::default() };
        assert!(fista_solve(&obs, &bank, &cfg, None).is_ok());
    }

    #[test]
    fn trace_csv_header_and_monotonicity() {
        let bank = bank();
        let d = Array2::from_shape_fn((10, 10), |(i, j)| if (i, j) == (4, 5) { 1.0 } else { 0.0 });
        let obs = Observation::uniform(d).unwrap();
        let cfg = SolverConfig { lambda: 1e-3, max_iters: 200, ..Default::default() };
        let (a, trace) = fista_solve(&obs, &bank, &cfg, None).unwrap();
        assert!(a.is_nonnegative());
        assert!(trace.is_monotone());
        let csv = trace.to_csv();
        assert!(csv.starts_with("iter,cost,data,reg,step,restart\n"));
        assert_eq!(csv.lines().count(), trace.records.len() + 1);
    }

    #[test]
    fn masked_pixels_stay_empty() {
        let bank = bank();
        let d = Array2::from_elem((10, 10), 1.0);
        let mut mask = Array2::from_elem((10, 10), true);
        mask[[3, 3]] = false;
        let obs = Observation::new(d, Array2::ones((10, 10)), mask).unwrap();
        let mut init = PsdrTensor::zeros(10, 10, 2);
        init.data_mut().fill(1.0);
        let cfg = SolverConfig { lambda: 1e-2, max_iters: 50, ..Default::default() };
        let (a, _) = fista_solve(&obs, &bank, &cfg, Some(&init)).unwrap();
        assert_eq!(a.data()[[3, 3, 0]], 0.0);
        assert_eq!(a.data()[[3, 3, 1]], 0.0);
    }
}
