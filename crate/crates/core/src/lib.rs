//! Residual networks with identity shortcuts of depth `n`, studied at the
//! zero initial point.
//!
//! The crate is `no_std` (it needs `alloc`) and contains only numerics:
//!
//! * [`linalg`]: dense matrices, a cyclic Jacobi eigensolver, QR, the
//!   vec-transpose permutation and nearest-rank percentiles.
//! * [`network`]: `n`-shortcut networks, the biased two-layer variant,
//!   forward evaluation, MSE loss and reverse-mode gradients.
//! * [`hessian`]: finite-difference Hessians, closed-form Hessians at zero
//!   for `n = 1` and `n = 2`, spectrum reports and stationarity-order probes.
//! * [`construct`]: the column-mover residual unit, obstacle-avoiding
//!   paths on the unit sphere and the small-norm exact-fit network builder.
//! * [`experiment`]: weight initialisation, whitened datasets, full-batch
//!   gradient descent and depth sweeps.
//!
//! File formats and the command-line front end live in `shortcut-lab`.
#![cfg_attr(not(any(feature = "std", test)), no_std)]

extern crate alloc;

mod error;
mod math;

pub mod construct;
pub mod experiment;
pub mod hessian;
pub mod linalg;
pub mod network;
pub mod rng;

pub use error::{Error, Result};
pub use linalg::Matrix;
pub use network::{Activation, ActivationTriple, Dataset, NetworkShape, ParamVector, ShortcutNetwork};
