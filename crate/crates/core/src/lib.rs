//! Source localization by inverse diffusion.
//!
//! Particles released by cells on a receptor-coated surface diffuse in 3D,
//! adsorb and desorb, and are imaged as a 2D bound density. This crate
//! characterizes that process from physical constants, synthesizes images
//! from point sources, and recovers the sources by solving a non-negative,
//! group-sparse inverse problem over a bank of Gaussian scale-space kernels.
//!
//! Modules, bottom-up:
//!
//! - [`mathcore`]: `erfcx`, the normal CDF, the pixel-box weights `omega`,
//!   Poisson mass and quantile, tabulated convolution powers.
//! - [`physics`]: the free-motion time density `phi`, its truncation order,
//!   a finite-difference oracle of the surface PDE, PSDR synthesis and the
//!   sensor model.
//! - [`operator`]: kernel bank, forward operator, adjoint, norm estimate.
//! - [`solver`]: cost, gradient, the non-negative group prox and the
//!   accelerated proximal gradient solve.
//! - [`detect`]: source maps, peak picking and precision/recall scoring.
//! - [`io`]: the tensor file format, PGM export, CSV writers and the
//!   run configuration used by the `invdiff` binary.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod detect;
pub mod error;
pub mod io;
pub mod mathcore;
pub mod operator;
pub mod physics;
pub mod pipeline;
pub mod solver;

pub use error::{Error, Result};
