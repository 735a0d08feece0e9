//! The discretized diffusion operator: kernel bank, forward map, adjoint,
//! weighted residuals and spectral-norm estimation.

pub mod conv;
mod diffusion;
mod grid;
mod kernels;
mod tensor;

pub use conv::{convolve_direct, ConvMethod, FourierPlan, DIRECT_MAX_RADIUS};
pub use diffusion::{
    adjoint, forward, op_norm_estimate, weighted_residual_norm_sq, DiffusionOperator,
};
pub use grid::SigmaGrid;
pub use kernels::{build_kernel_bank, truncation_radius, Kernel, KernelBank, DEFAULT_QUAD_ORDER};
pub use tensor::{Observation, PsdrTensor};
