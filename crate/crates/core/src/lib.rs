//! Solvers for linear equations driven by Caputo and Riemann-Liouville type
//! operators of order β ∈ (0, 1) and their generalisations to decreasing jump
//! kernels ν(t, r).
//!
//! Three independent engines cover the same problems:
//! - [`solve_mc`]: Monte Carlo over the interrupted decreasing process;
//! - [`solve_quad`]: quadrature against stable transition densities;
//! - [`solve_quad::solve_caputo_closed_form`]: the Mittag-Leffler closed form.

pub mod cli;
pub mod config;
pub mod curve;
pub mod error;
pub mod kernels;
pub mod paths;
pub mod quad;
pub mod solve_mc;
pub mod solve_quad;
pub mod source;
pub mod special;
pub mod stats;
pub mod validate;

pub use error::{Error, Result};
