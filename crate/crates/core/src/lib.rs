//! Bayesian optimization with a Gaussian-process prior tuned on auxiliary data.
//!
//! The pipeline: train an SVM on an auxiliary dataset with a free m-kernel
//! ([`pretrain`]), fold the dual coefficients into a re-weighted covariance
//! ([`mkernel::TunedKernel`]), and run Bayesian optimization with that
//! covariance ([`bo`]). [`bench`] reproduces the flipped-test-function
//! experiments against standard SE baselines.

pub mod bench;
pub mod bo;
pub mod error;
pub mod gp;
mod json;
mod linalg;
pub mod mkernel;
pub mod pretrain;

pub use error::{Error, Result};
pub use gp::{ArdSquaredExp, Covariance, GpPosterior, Observations, SquaredExp};
pub use mkernel::{FreeKernelSpec, KernelFamily, TunedKernel};
pub use pretrain::{AuxDataset, AuxModel, HyperGrid, Task};

#[doc(hidden)]
pub use linalg::min_eigenvalue;
