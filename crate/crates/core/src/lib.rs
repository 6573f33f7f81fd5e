//! Grid functions on dyadic uniform grids and the two measure-valued limits
//! they encode.
//!
//! A [`GridFunction`] on a fine grid of step `eps = 2^-j` carries both a
//! weak-* limit (a Radon measure, including concentrations) and a Young
//! measure (the local distribution of values, recording oscillations). This
//! crate provides the discrete calculus on such grids, the extraction and
//! synthesis of both limits, a solver for the forward-backward parabolic
//! Neumann problem `u_t = Δφ(u)` in its grid formulation, and residual-based
//! checks that a run is an entropy measure-valued solution.
//!
//! The crate is `no_std` and only needs `alloc`. File formats and the command
//! line driver live in `hypergrid-lab`.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod calculus;
mod error;
pub mod flux;
pub mod grid;
pub mod linalg;
pub mod measure;
pub mod quadrature;
pub mod reduce;
pub mod solver;
pub mod test_fields;
pub mod verify;

pub use error::{Error, Result};
pub use grid::{Grid, GridDomain, GridFunction, Omega};
