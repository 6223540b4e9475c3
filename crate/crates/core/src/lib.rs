//! Principal eigenvalues of time-periodic cooperative reaction-diffusion
//! systems, their asymptotic limits, and the level sets of `lambda(omega, rho)`.

// index loops mirror the stencils; `!(x > 0.0)` also rejects NaN
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod coefficients;
pub mod cli;
pub mod config;
pub mod diagnostics;
pub mod elliptic;
pub mod error;
pub mod floquet_ode;
pub mod grid;
pub mod hj;
pub mod levelset;
pub mod linalg;
pub mod output;
pub mod parabolic;
pub mod problem;
pub mod verify;

pub use error::{Error, Result};
