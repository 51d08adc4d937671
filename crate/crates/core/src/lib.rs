//! Spatial-fractional anisotropic diffusion for grayscale image denoising.
//!
//! The solver evolves `du/dt = -div^a( g(|grad^b u|) grad^a u )` with
//! two-sided Grünwald-Letnikov derivatives of orders `a` (flux) and `b`
//! (edge detection), discretized by the second-order G2 scheme under the
//! Short Memory Principle and stepped with forward Euler. Classical
//! baselines (Perona-Malik, Gaussian, median) and PSNR/SSIM metrics round
//! out the benchmark toolkit.

pub mod baselines;
pub mod diffusion;
pub mod error;
pub mod field;
pub mod fracops;
pub mod gamma;
pub mod metrics;

pub use error::{CoreError, Result};
pub use field::{Grid, VectorField};
pub use fracops::{GLKernel, TwoSidedKernel};
