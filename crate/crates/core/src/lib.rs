//! Finite element solvers for the spectral fractional diffusion problem
//! `L^s u = f` through its local extension to a half-cylinder.

// Parameter guards are written `!(x > 0.0)` so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bessel;
pub mod error;
pub mod extension_solver;
pub mod fem_omega;
pub mod fem_y;
pub mod linalg;
pub mod problem;
pub mod quadrature;
pub mod special;
pub mod spectral_oracle;

pub use error::{Error, Result};
pub use problem::{
    Coefficients, DomainKind, DomainSpec, FractionalOrder, FractionalProblem, Forcing, Point,
};
