//! Sparse symmetric matrices, SPD solvers and the dense generalized
//! symmetric-definite eigenproblem.

mod cg;
mod cholesky;
mod dense;
mod ordering;
mod sparse;

pub use cg::{pcg_jacobi, CgOutcome};
pub use cholesky::{CholeskyFactor, CholeskySymbolic};
pub use dense::{gen_sym_eig, DenseSym, GenEig};
pub use ordering::nested_dissection;
pub use sparse::{SparseSym, TripletBuilder};

use crate::error::Result;

/// Sizes above this go to preconditioned CG instead of sparse Cholesky.
pub const DIRECT_SOLVE_LIMIT: usize = 400_000;
/// Relative residual target of [`spd_solve`].
pub const SOLVE_TOLERANCE: f64 = 1e-10;

/// Solves `A x = b` for SPD `A` to relative residual `SOLVE_TOLERANCE`.
pub fn spd_solve(a: &SparseSym, b: &[f64]) -> Result<Vec<f64>> {
    if a.n() <= DIRECT_SOLVE_LIMIT {
        let sym = CholeskySymbolic::analyze(a);
        sym.factor(a)?.solve_refined(a, b)
    } else {
        let out = pcg_jacobi(a, b, SOLVE_TOLERANCE * 0.5, 20 * a.n().max(100))?;
        Ok(out.x)
    }
}

pub(crate) fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
