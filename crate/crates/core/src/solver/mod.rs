//! Accelerated proximal gradient solve of the regularized inverse problem.

mod cost;
mod fista;
mod prox;

pub use cost::{cost, grad_data, group_norm, Cost};
pub use fista::{
    check_existence, fista_solve, lambda_max, fista_solve_with, lipschitz, SolveTrace, SolverConfig, TraceRecord,
};
pub use prox::prox_group_nonneg;
