//! Core numerics for neural homogenization of multiscale PDEs.
//!
//! The crate is split along the pipeline:
//!
//! - [`diffnet`]: tanh multilayer perceptron with exact input derivatives up to
//!   second order, reverse-mode parameter gradients and Adam.
//! - [`collocation`]: uniform grids, boundary sets, periodic pairs and the
//!   oversampling bands used for periodic cell problems.
//! - [`pinn`]: PDE operators, the weighted collocation loss and full-batch training.
//! - [`homogenize`]: cell problems, periodic quadrature and effective coefficients.
//! - [`reference`]: finite-difference solvers used as ground truth.
//!
//! Everything here is `no_std` + `alloc`; IO, caching and the CLI live in the
//! `nhpinn` crate.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod collocation;
pub mod diffnet;
mod error;
pub mod homogenize;
pub mod linalg;
pub mod pinn;
pub mod reference;
pub mod spline;

pub use error::{Error, Result};
