//! Structured-grid simulation and diagnostics for the Keller–Segel
//! consumption system
//!
//! ```text
//! n_t = Δn − χ ∇·(n ∇c)
//! c_t = Δc − n c
//! ```
//!
//! on boxes with homogeneous Neumann conditions or on periodic tori.
//!
//! The crate is `no_std` (it needs `alloc`) and carries no IO. File formats,
//! configuration and the command line live in the `kscons` companion crate.
//!
//! Module map:
//!
//! * [`grid`]: grids, cell-centered fields, face-centered vector fields, quadrature.
//! * [`operators`]: second-order Laplacian, gradient, divergence, chemotactic flux, Hessian.
//! * [`solver`]: positivity-preserving, mass-conserving time stepping.
//! * [`diagnostics`]: energy functionals, criterion accumulators, inequality monitors.
//! * [`blowup`]: rate fitting, type classification, lower-bound constant, non-degeneracy maps.
//! * [`scaling`]: parabolic rescaling on the torus and the invariance test.
#![no_std]
#![forbid(unsafe_code)]
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

extern crate alloc;

mod error;
mod sum;

pub mod blowup;
pub mod diagnostics;
pub mod exponent;
pub mod grid;
pub mod operators;
pub mod scaling;
pub mod solver;

pub use error::{Error, Result};
pub use exponent::Exponent;
pub use grid::{Centering, Field, Grid, GridSpec, Topology, VectorField};
pub use solver::{SolverConfig, State};
pub use sum::pairwise_sum;
