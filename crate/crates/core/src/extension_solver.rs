//! Discrete extension problems on the truncated cylinder `Omega x (0, Y)`:
//! diagonalization in `y`, the monolithic tensor solve it replaces, the
//! sparse combination formula and energy errors.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fem_omega::{OmegaSpace, OmegaSystem, PreparedForcing, ShiftedSolver};
use crate::fem_y::{
    assemble_weighted, assemble_weighted_telescoped, geometric_mesh, radical_geometric_mesh, untelescope, DegreeVector, YSpace,
};
use crate::linalg::{dot, spd_solve, DenseSym, TripletBuilder};
use crate::problem::{FractionalOrder, FractionalProblem};

/// Largest tensor system accepted by [`solve_full_tensor_direct`].
pub const FULL_TENSOR_LIMIT: usize = 500_000;

/// Generalized eigenpairs `M_y v = mu S_y v` of a y-space.
#[derive(Debug, Clone)]
pub struct DiagonalizedSystem {
    pub y_space: YSpace,
    pub alpha: f64,
    /// Ascending.
    pub mu: Vec<f64>,
    /// `S_y`-orthonormal.
    pub vectors: Vec<Vec<f64>>,
    /// `v_i(0)`.
    pub trace: Vec<f64>,
    pub stiffness: DenseSym,
    pub mass: DenseSym,
    /// The eigenproblem as solved: matrices and vectors in the telescoped
    /// basis of [`assemble_weighted_telescoped`].
    telescoped: (DenseSym, DenseSym, Vec<Vec<f64>>),
}

impl DiagonalizedSystem {
    pub fn len(&self) -> usize {
        self.mu.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mu.is_empty()
    }

    /// `Y^2 / (1 - alpha^2)`, an upper bound for every `mu_i`.
    pub fn mu_upper_bound(&self) -> f64 {
        self.y_space.y_max().powi(2) / (1.0 - self.alpha * self.alpha)
    }

    /// Largest deviation of `V^T S V` from `I` and of `V^T M V` from
    /// `diag(mu)`, evaluated in the telescoped basis. The same products
    /// with the nodal matrices pick up rounding of order
    /// `eps * y_max / h_min` on graded meshes.
    pub fn orthonormality_defect(&self) -> f64 {
        let (st, mt, x) = &self.telescoped;
        let mut worst = 0.0f64;
        for i in 0..self.len() {
            let si = st.mul_vec(&x[i]);
            let mi = mt.mul_vec(&x[i]);
            for j in 0..self.len() {
                let s = dot(&si, &x[j]) - if i == j { 1.0 } else { 0.0 };
                let m = dot(&mi, &x[j]) - if i == j { self.mu[i] } else { 0.0 };
                worst = worst.max(s.abs()).max(m.abs() / self.mu[self.len() - 1]);
            }
        }
        worst
    }
}

pub fn diagonalize(y_space: &YSpace, alpha: f64) -> Result<DiagonalizedSystem> {
    let (s, m) = assemble_weighted(y_space, alpha)?;
    let (st, mt) = assemble_weighted_telescoped(y_space, alpha)?;
    let eig = crate::linalg::gen_sym_eig(&mt, &st)?;
    let vectors: Vec<Vec<f64>> = eig.vectors.iter().map(|x| untelescope(y_space, x)).collect();
    let t = y_space.trace_dof();
    let trace = vectors.iter().map(|v| v[t]).collect();
    Ok(DiagonalizedSystem {
        y_space: y_space.clone(),
        alpha,
        mu: eig.values,
        vectors,
        trace,
        stiffness: s,
        mass: m,
        telescoped: (st, mt, eig.vectors),
    })
}

/// A spatial space with its matrices, the load of the problem's forcing
/// and a reusable solver for the shifted systems.
#[derive(Debug, Clone)]
pub struct PreparedOmega {
    pub space: OmegaSpace,
    pub system: OmegaSystem,
    /// `b_j = <f, phi_j>`.
    pub load: Vec<f64>,
    pub solver: ShiftedSolver,
}

impl PreparedOmega {
    pub fn new(problem: &FractionalProblem, space: OmegaSpace) -> Result<Self> {
        let system = space.assemble(&problem.coefficients)?;
        let load = space.load(&PreparedForcing::new(&problem.forcing, &problem.domain)?)?;
        let solver = ShiftedSolver::new(&system)?;
        Ok(Self { space, system, load, solver })
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }
}

/// Discrete extension solution `sum_i U_i(x) v_i(y)`.
#[derive(Debug, Clone)]
pub struct ExtensionSolution {
    pub order: FractionalOrder,
    pub mu: Vec<f64>,
    pub trace_values: Vec<f64>,
    /// `U_i`; empty when the solve was asked not to keep them.
    pub components: Vec<Vec<f64>>,
    /// Coefficients of the trace at `y = 0` in the spatial space.
    pub trace: Vec<f64>,
    /// `<f, tr u>`.
    pub pairing: f64,
    /// `sum_i mu_i a(U_i, U_i) + m(U_i, U_i)`.
    pub energy_squared: f64,
    pub n_omega: usize,
    pub n_y: usize,
}

impl ExtensionSolution {
    pub fn total_dofs(&self) -> usize {
        self.n_omega * self.n_y
    }
}

/// Things whose trace can be paired with the forcing.
pub trait TracePairing {
    /// `d_s <f, tr u>`.
    fn scaled_pairing(&self) -> f64;
}

impl TracePairing for ExtensionSolution {
    fn scaled_pairing(&self) -> f64 {
        self.order.d_s() * self.pairing
    }
}

/// Solves the `M` decoupled problems `(mu_i A + M) U_i = d_s v_i(0) b`.
pub fn solve_diagonalized(
    order: FractionalOrder,
    omega: &PreparedOmega,
    diag: &DiagonalizedSystem,
    keep_components: bool,
) -> Result<ExtensionSolution> {
    let ds = order.d_s();
    let n = omega.dim();
    let zero_rhs = omega.load.iter().all(|&v| v == 0.0);
    let solves: Vec<Result<(Vec<f64>, f64)>> = (0..diag.len())
        .into_par_iter()
        .map(|i| {
            let scale = ds * diag.trace[i];
            if zero_rhs || scale == 0.0 {
                return Ok((vec![0.0; n], 0.0));
            }
            let g: Vec<f64> = omega.load.iter().map(|b| scale * b).collect();
            let u = omega.solver.solve(diag.mu[i], &g)?;
            let e = diag.mu[i] * omega.system.a.bilinear(&u, &u) + omega.system.m.bilinear(&u, &u);
            Ok((u, e))
        })
        .collect();
    let mut trace = vec![0.0; n];
    let mut energy = 0.0;
    let mut components = Vec::with_capacity(if keep_components { diag.len() } else { 0 });
    for (i, r) in solves.into_iter().enumerate() {
        let (u, e) = r?;
        let t = diag.trace[i];
        for (x, ui) in trace.iter_mut().zip(&u) {
            *x += t * ui;
        }
        energy += e;
        if keep_components {
            components.push(u);
        }
    }
    let pairing = dot(&omega.load, &trace);
    Ok(ExtensionSolution {
        order,
        mu: diag.mu.clone(),
        trace_values: diag.trace.clone(),
        components,
        trace,
        pairing,
        energy_squared: energy,
        n_omega: n,
        n_y: diag.len(),
    })
}

/// Tensor-product system `M_y (x) A + S_y (x) M`, y-index outermost.
pub fn assemble_full_tensor(omega: &PreparedOmega, diag: &DiagonalizedSystem) -> Result<crate::linalg::SparseSym> {
    let n = omega.dim();
    let my = diag.len();
    let total = n * my;
    if total > FULL_TENSOR_LIMIT {
        return Err(Error::Resource(format!("tensor system of size {total} exceeds {FULL_TENSOR_LIMIT}")));
    }
    let (a, m) = (&omega.system.a, &omega.system.m);
    let mut b = TripletBuilder::with_capacity(total, 4 * my * a.nnz());
    for p in 0..my {
        for q in p..my {
            let (yp, ys) = (diag.mass.get(p, q), diag.stiffness.get(p, q));
            if yp == 0.0 && ys == 0.0 {
                continue;
            }
            for ((i, j, av), (_, _, mv)) in a.upper_entries().zip(m.upper_entries()) {
                let v = yp * av + ys * mv;
                b.add(p * n + i, q * n + j, v);
                if p != q && i != j {
                    b.add(p * n + j, q * n + i, v);
                }
            }
        }
    }
    Ok(b.finalize())
}

/// Monolithic Galerkin solve on the tensor space; reported in the
/// eigenbasis so it can be compared with [`solve_diagonalized`].
pub fn solve_full_tensor_direct(
    order: FractionalOrder,
    omega: &PreparedOmega,
    diag: &DiagonalizedSystem,
) -> Result<ExtensionSolution> {
    if omega.system.a.row_ptr() != omega.system.m.row_ptr() || omega.system.a.col_indices() != omega.system.m.col_indices() {
        return Err(Error::Parameter("stiffness and mass patterns differ".into()));
    }
    let n = omega.dim();
    let my = diag.len();
    let op = assemble_full_tensor(omega, diag)?;
    let mut rhs = vec![0.0; n * my];
    let t = diag.y_space.trace_dof();
    let ds = order.d_s();
    for (r, b) in rhs[t * n..(t + 1) * n].iter_mut().zip(&omega.load) {
        *r = ds * b;
    }
    let w = if rhs.iter().all(|&v| v == 0.0) { vec![0.0; n * my] } else { spd_solve(&op, &rhs)? };
    let energy = dot(&w, &op.mul_vec(&w));
    let trace = w[t * n..(t + 1) * n].to_vec();
    // U_i = sum_k (S_y v_i)_k W_k
    let mut components = Vec::with_capacity(my);
    for v in &diag.vectors {
        let sv = diag.stiffness.mul_vec(v);
        let mut u = vec![0.0; n];
        for (k, c) in sv.iter().enumerate() {
            for (x, wk) in u.iter_mut().zip(&w[k * n..(k + 1) * n]) {
                *x += c * wk;
            }
        }
        components.push(u);
    }
    let pairing = dot(&omega.load, &trace);
    Ok(ExtensionSolution {
        order,
        mu: diag.mu.clone(),
        trace_values: diag.trace.clone(),
        components,
        trace,
        pairing,
        energy_squared: energy,
        n_omega: n,
        n_y: my,
    })
}

/// One term of the combination formula.
#[derive(Debug, Clone, PartialEq)]
pub struct CombinationTerm {
    pub omega_level: usize,
    pub y_level: usize,
    pub sign: f64,
    pub n_omega: usize,
    pub n_y: usize,
    /// `<f, tr u_{l, l'}>`.
    pub pairing: f64,
}

/// `sum_{l=0}^{L} (u_{l, L-l} - u_{l-1, L-l})`, stored termwise.
#[derive(Debug, Clone)]
pub struct SparseSolution {
    pub order: FractionalOrder,
    pub level: usize,
    pub terms: Vec<CombinationTerm>,
    pub pairing: f64,
    /// Dimension of the sparse tensor space, `sum_l (N_l - N_{l-1}) M_{L-l}`.
    pub dimension: usize,
}

impl SparseSolution {
    /// Dimension of the sparse tensor space.
    pub fn total_dofs(&self) -> usize {
        self.dimension
    }

    /// Sum of the dof counts of all component solves.
    pub fn work(&self) -> usize {
        self.terms.iter().map(|t| t.n_omega * t.n_y).sum()
    }
}

impl TracePairing for SparseSolution {
    fn scaled_pairing(&self) -> f64 {
        self.order.d_s() * self.pairing
    }
}

/// Combination-formula solution of level `level` from nested spatial and
/// y hierarchies (index = level, at least `level + 1` entries each).
pub fn solve_sparse_combination(
    order: FractionalOrder,
    omegas: &[PreparedOmega],
    ys: &[DiagonalizedSystem],
    level: usize,
) -> Result<SparseSolution> {
    if omegas.len() <= level || ys.len() <= level {
        return Err(Error::Parameter(format!(
            "level {level} needs {} spatial and y levels (got {}, {})",
            level + 1,
            omegas.len(),
            ys.len()
        )));
    }
    for w in omegas[..=level].windows(2) {
        if !w[0].space.is_refined_by(&w[1].space) {
            return Err(Error::Parameter("spatial hierarchy is not nested".into()));
        }
    }
    for w in ys[..=level].windows(2) {
        if !w[0].y_space.mesh.is_nested_in(&w[1].y_space.mesh) {
            return Err(Error::Parameter("y hierarchy is not nested".into()));
        }
    }
    let mut terms = Vec::with_capacity(2 * level + 1);
    for l in 0..=level {
        let yl = level - l;
        let plus = solve_diagonalized(order, &omegas[l], &ys[yl], false)?;
        terms.push(CombinationTerm {
            omega_level: l,
            y_level: yl,
            sign: 1.0,
            n_omega: plus.n_omega,
            n_y: plus.n_y,
            pairing: plus.pairing,
        });
        if l > 0 {
            let minus = solve_diagonalized(order, &omegas[l - 1], &ys[yl], false)?;
            terms.push(CombinationTerm {
                omega_level: l - 1,
                y_level: yl,
                sign: -1.0,
                n_omega: minus.n_omega,
                n_y: minus.n_y,
                pairing: minus.pairing,
            });
        }
    }
    let pairing = terms.iter().map(|t| t.sign * t.pairing).sum();
    let dimension = (0..=level)
        .map(|l| {
            let coarser = if l == 0 { 0 } else { omegas[l - 1].dim() };
            (omegas[l].dim() - coarser) * ys[level - l].len()
        })
        .sum();
    Ok(SparseSolution { order, level, terms, pairing, dimension })
}

/// `d_s <f, u> - d_s <f, tr u_h>`; small negative values from reference
/// roundoff are clipped to zero.
pub fn energy_error_squared(reference_pairing: f64, sol: &impl TracePairing) -> Result<f64> {
    let value = reference_pairing - sol.scaled_pairing();
    if value < -1e-12 * reference_pairing.abs() {
        return Err(Error::ReferenceInconsistency { value, reference: reference_pairing });
    }
    Ok(value.max(0.0))
}

/// Truncation and y-mesh parameters as functions of the spatial mesh size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Truncation {
    /// Piecewise linears on a radical-geometric mesh.
    P1 { y_max: f64, eta: f64, k: f64 },
    /// Linear degree vector on a geometric mesh.
    HpInY { y_max: f64, m: usize, sigma: f64, slope: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TruncationMode {
    P1,
    HpInY,
}

/// `P1`: `Y = |ln h|`, `eta = 2/s`, `k = h/2`. `HpInY`: `Y = |log2 h| / 3`,
/// `M = |log2(h/2)|`, `sigma = 0.05`, slope 2. `Y` is floored at 1.
pub fn choose_truncation(h: f64, mode: TruncationMode, order: FractionalOrder) -> Result<Truncation> {
    if !(h > 0.0 && h < 1.0) {
        return Err(Error::Parameter(format!("mesh size {h} outside (0, 1)")));
    }
    Ok(match mode {
        TruncationMode::P1 => Truncation::P1 { y_max: h.ln().abs().max(1.0), eta: 2.0 / order.s(), k: h / 2.0 },
        TruncationMode::HpInY => Truncation::HpInY {
            y_max: (h.log2().abs() / 3.0).max(1.0),
            m: (h / 2.0).log2().abs().round().max(1.0) as usize,
            sigma: 0.05,
            slope: 2.0,
        },
    })
}

impl Truncation {
    pub fn y_max(&self) -> f64 {
        match *self {
            Truncation::P1 { y_max, .. } | Truncation::HpInY { y_max, .. } => y_max,
        }
    }

    pub fn with_y_max(self, y: f64) -> Self {
        match self {
            Truncation::P1 { eta, k, .. } => Truncation::P1 { y_max: y, eta, k },
            Truncation::HpInY { m, sigma, slope, .. } => Truncation::HpInY { y_max: y, m, sigma, slope },
        }
    }

    pub fn y_space(&self) -> Result<YSpace> {
        match *self {
            Truncation::P1 { y_max, eta, k } => Ok(YSpace::p1(radical_geometric_mesh(eta, k, y_max)?)),
            Truncation::HpInY { y_max, m, sigma, slope } => {
                YSpace::new(geometric_mesh(sigma, m, y_max)?, DegreeVector::linear(m, slope))
            }
        }
    }
}
