//! Discretizations of the spatial domain and the reaction-diffusion
//! problems `mu a(U, V) + (U, V) = (g, V)` they are used for.

mod interval;
mod p1;
mod trimesh;

pub use interval::{boundary_layer_count, hp_interval_space, IntervalSpace};
pub use p1::P1Space;
pub use trimesh::{default_grading, graded_hierarchy, graded_triangulation, CornerGrading, TriMesh};

use crate::error::{Error, Result};
use crate::linalg::{pcg_jacobi, CholeskySymbolic, SparseSym, DIRECT_SOLVE_LIMIT, SOLVE_TOLERANCE};
use crate::problem::{Coefficients, DomainSpec, Forcing, Point};
use crate::spectral_oracle::{sine_modes, SineMode};

/// A forcing ready for repeated pointwise evaluation.
#[derive(Debug, Clone)]
pub enum PreparedForcing {
    Constant(f64),
    Spectral(Vec<(f64, SineMode)>),
    Direct { forcing: Forcing, domain: DomainSpec },
}

impl PreparedForcing {
    pub fn new(f: &Forcing, domain: &DomainSpec) -> Result<Self> {
        Ok(match f {
            Forcing::Constant(v) => PreparedForcing::Constant(*v),
            Forcing::SpectralCoefficients(c) => {
                let modes = sine_modes(domain, c.len())?;
                PreparedForcing::Spectral(c.iter().copied().zip(modes).filter(|(v, _)| *v != 0.0).collect())
            }
            _ => PreparedForcing::Direct { forcing: f.clone(), domain: domain.clone() },
        })
    }

    pub fn is_zero(&self) -> bool {
        match self {
            PreparedForcing::Constant(v) => *v == 0.0,
            PreparedForcing::Spectral(m) => m.is_empty(),
            PreparedForcing::Direct { forcing, .. } => forcing.is_zero(),
        }
    }

    pub fn eval(&self, x: Point) -> Result<f64> {
        match self {
            PreparedForcing::Constant(v) => Ok(*v),
            PreparedForcing::Spectral(m) => Ok(m.iter().map(|(c, mode)| c * mode.eval(x)).sum()),
            PreparedForcing::Direct { forcing, domain } => forcing.eval(domain, x),
        }
    }
}

/// Discrete space on the spatial domain.
#[derive(Debug, Clone)]
pub enum OmegaSpace {
    P1(P1Space),
    Interval(IntervalSpace),
}

/// Matrices of one spatial space: diffusion part `k`, reaction part `c`,
/// `a = k + c` and plain mass `m`, all sharing one sparsity pattern.
#[derive(Debug, Clone)]
pub struct OmegaSystem {
    pub k: SparseSym,
    pub c: SparseSym,
    pub a: SparseSym,
    pub m: SparseSym,
}

impl OmegaSpace {
    pub fn dim(&self) -> usize {
        match self {
            OmegaSpace::P1(s) => s.dim(),
            OmegaSpace::Interval(s) => s.dim(),
        }
    }

    /// Largest element size (`sqrt(2|K|)` for triangles, length for intervals).
    pub fn h_max(&self) -> f64 {
        match self {
            OmegaSpace::P1(s) => s.mesh.h_max(),
            OmegaSpace::Interval(s) => s.h_max(),
        }
    }

    pub fn assemble(&self, coeff: &Coefficients) -> Result<OmegaSystem> {
        let (k, c, m) = match self {
            OmegaSpace::P1(s) => s.assemble(coeff)?,
            OmegaSpace::Interval(s) => s.assemble(coeff)?,
        };
        let a = SparseSym::axpby(1.0, &k, 1.0, &c)?;
        Ok(OmegaSystem { k, c, a, m })
    }

    pub fn load(&self, f: &PreparedForcing) -> Result<Vec<f64>> {
        match self {
            OmegaSpace::P1(s) => s.load(f),
            OmegaSpace::Interval(s) => s.load(f),
        }
    }

    /// True when `finer` is built on a refinement of this space's mesh (the
    /// polynomial degree may differ).
    pub fn is_refined_by(&self, finer: &OmegaSpace) -> bool {
        match (self, finer) {
            (OmegaSpace::P1(a), OmegaSpace::P1(b)) => a.mesh.is_refined_by(&b.mesh),
            (OmegaSpace::Interval(a), OmegaSpace::Interval(b)) => a
                .breakpoints
                .iter()
                .all(|x| b.breakpoints.iter().any(|y| (x - y).abs() <= 1e-12 * x.abs().max(1.0))),
            _ => false,
        }
    }

    /// Value of the discrete function with coefficients `u` at `x`
    /// (zero outside the domain).
    pub fn eval(&self, u: &[f64], x: Point) -> f64 {
        match self {
            OmegaSpace::P1(s) => s.eval(u, x).unwrap_or(0.0),
            OmegaSpace::Interval(s) => s.eval(u, x[0]),
        }
    }
}

/// Solver for `(mu A + M) U = g` over many `mu`, sharing one symbolic
/// factorization.
#[derive(Debug, Clone)]
pub struct ShiftedSolver {
    a: SparseSym,
    m: SparseSym,
    symbolic: Option<CholeskySymbolic>,
}

impl ShiftedSolver {
    pub fn new(system: &OmegaSystem) -> Result<Self> {
        let pattern = SparseSym::axpby(1.0, &system.a, 1.0, &system.m)?;
        let symbolic = (pattern.n() <= DIRECT_SOLVE_LIMIT).then(|| CholeskySymbolic::analyze(&pattern));
        Ok(Self { a: system.a.clone(), m: system.m.clone(), symbolic })
    }

    pub fn dim(&self) -> usize {
        self.a.n()
    }

    pub fn operator(&self, mu: f64) -> Result<SparseSym> {
        SparseSym::axpby(mu, &self.a, 1.0, &self.m)
    }

    pub fn solve(&self, mu: f64, rhs: &[f64]) -> Result<Vec<f64>> {
        if !(mu > 0.0) {
            return Err(Error::Parameter(format!("shift {mu} must be positive")));
        }
        if rhs.len() != self.dim() {
            return Err(Error::Parameter(format!("right-hand side has length {} not {}", rhs.len(), self.dim())));
        }
        if self.dim() == 0 || rhs.iter().all(|&v| v == 0.0) {
            return Ok(vec![0.0; self.dim()]);
        }
        let op = self.operator(mu)?;
        match &self.symbolic {
            Some(sym) => sym.factor(&op)?.solve_refined(&op, rhs),
            None => Ok(pcg_jacobi(&op, rhs, SOLVE_TOLERANCE * 0.5, 20 * op.n().max(100))?.x),
        }
    }
}

/// Solves `(mu A + M) U = rhs_scale * b` once.
pub fn reaction_diffusion_solve(system: &OmegaSystem, mu: f64, rhs_scale: f64, b: &[f64]) -> Result<Vec<f64>> {
    let g: Vec<f64> = b.iter().map(|v| rhs_scale * v).collect();
    ShiftedSolver::new(system)?.solve(mu, &g)
}
