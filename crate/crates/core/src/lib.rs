//! Stochastic convolutions driven by Brownian and compensated Poisson noise,
//! fractional heat kernels, and parabolic Campanato/Hölder seminorms.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod campanato;
pub mod conditions;
pub mod convolution;
pub mod error;
pub mod isometry;
pub mod kernels;
pub mod moments;
pub mod noise;
pub mod quadrature;
pub mod regression;

pub use error::{Error, Result};
pub use kernels::{eval_kernel, KernelSpec, LatticeField, Method, SpectralGrid, SpectralPlan};
pub use regression::{fit_exponent, PowerFit};
