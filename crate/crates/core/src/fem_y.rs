//! Discretization in the extended variable `y` on `[0, Y]`: radical-geometric
//! and geometric meshes, degree vectors, `y^alpha`-weighted mass and
//! stiffness matrices, and the interpolants used by the analysis tests.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::DenseSym;
use crate::quadrature::{gauss_lobatto, legendre, weighted_interval_rule, Rule};

pub const MAX_DEGREE: usize = 30;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum YMeshKind {
    RadicalGeometric { eta: f64, k: f64, y_max: f64 },
    Geometric { sigma: f64, m: usize, y_max: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct YMesh {
    pub kind: YMeshKind,
    pub breakpoints: Vec<f64>,
}

impl YMesh {
    pub fn num_elements(&self) -> usize {
        self.breakpoints.len() - 1
    }

    pub fn y_max(&self) -> f64 {
        *self.breakpoints.last().unwrap()
    }

    pub fn element(&self, e: usize) -> (f64, f64) {
        (self.breakpoints[e], self.breakpoints[e + 1])
    }

    pub fn min_element_size(&self) -> f64 {
        self.breakpoints.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min)
    }

    /// Index of the element containing `y` (closed on the left).
    pub fn locate(&self, y: f64) -> usize {
        let n = self.num_elements();
        match self.breakpoints.binary_search_by(|b| b.total_cmp(&y)) {
            Ok(i) => i.min(n - 1),
            Err(i) => (i.max(1) - 1).min(n - 1),
        }
    }

    /// True when every breakpoint of `self` is a breakpoint of `finer`.
    pub fn is_nested_in(&self, finer: &YMesh) -> bool {
        self.breakpoints.iter().all(|b| finer.breakpoints.iter().any(|f| (f - b).abs() <= 1e-12 * b.abs().max(1.0)))
    }
}

fn reciprocal_integer(k: f64) -> Option<usize> {
    if !(k > 0.0 && k <= 1.0) {
        return None;
    }
    let n = (1.0 / k).round();
    ((1.0 / k - n).abs() < 1e-9 * n).then_some(n as usize)
}

/// Mesh with breakpoints `(i k)^eta` on `[0, 1]` and `exp(j k)` on
/// `[1, Y]`, the last element closing at `Y`. Needs `k = 1/N`, `eta >= 1`,
/// `Y >= 1` (for `Y = 1` only the graded part remains).
pub fn radical_geometric_mesh(eta: f64, k: f64, y_max: f64) -> Result<YMesh> {
    let n = reciprocal_integer(k).ok_or_else(|| Error::Parameter(format!("k = {k} is not 1/N for an integer N")))?;
    if !(eta >= 1.0) {
        return Err(Error::Parameter(format!("grading exponent {eta} < 1")));
    }
    if !(y_max >= 1.0) {
        return Err(Error::Parameter(format!("truncation height {y_max} < 1")));
    }
    let k = 1.0 / n as f64;
    let mut b: Vec<f64> = (0..=n).map(|i| (i as f64 * k).powf(eta)).collect();
    b[n] = 1.0;
    let mut outer = (n as f64 * y_max.ln() + 1e-9).floor() as usize;
    if outer == 0 && y_max > 1.0 {
        outer = 1;
    }
    for j in 1..outer {
        b.push((j as f64 * k).exp());
    }
    if outer > 0 {
        b.push(y_max);
    }
    Ok(YMesh { kind: YMeshKind::RadicalGeometric { eta, k, y_max }, breakpoints: b })
}

/// `{0, Y sigma^{M-1}, ..., Y sigma, Y}`.
pub fn geometric_mesh(sigma: f64, m: usize, y_max: f64) -> Result<YMesh> {
    if !(sigma > 0.0 && sigma < 1.0) || m == 0 || !(y_max > 0.0) {
        return Err(Error::Parameter(format!("geometric mesh needs sigma in (0,1), M >= 1, Y > 0 (got {sigma}, {m}, {y_max})")));
    }
    let mut b = vec![0.0];
    for i in (0..m - 1).rev() {
        b.push(y_max * sigma.powi(i as i32 + 1));
    }
    b.push(y_max);
    Ok(YMesh { kind: YMeshKind::Geometric { sigma, m, y_max }, breakpoints: b })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DegreeVector {
    pub degrees: Vec<usize>,
}

impl DegreeVector {
    pub fn uniform(elements: usize, r: usize) -> Self {
        Self { degrees: vec![r; elements] }
    }

    /// `r_i = max(1, ceil(slope * i))`, `i = 1..=elements`, counted from the
    /// element touching `y = 0`.
    pub fn linear(elements: usize, slope: f64) -> Self {
        Self {
            degrees: (1..=elements).map(|i| ((slope * i as f64 - 1e-12).ceil() as usize).max(1)).collect(),
        }
    }

    pub fn max(&self) -> usize {
        self.degrees.iter().copied().max().unwrap_or(1)
    }
}

/// Integrated Legendre bubble `(P_j - P_{j-2}) / sqrt(2(2j-1))` and its
/// derivative, `j >= 2`.
fn bubble(j: usize, x: f64) -> (f64, f64) {
    let (pj, _) = legendre(j, x);
    let (pj2, _) = legendre(j - 2, x);
    let (pj1, _) = legendre(j - 1, x);
    let c = (2.0 * (2 * j - 1) as f64).sqrt();
    ((pj - pj2) / c, ((2 * j - 1) as f64 / 2.0).sqrt() * pj1)
}

/// Values and reference derivatives of the `r + 1` local shape functions
/// (left hat, right hat, bubbles of degree 2..=r) at `x` in `[-1, 1]`.
pub(crate) fn shape(r: usize, x: f64) -> (Vec<f64>, Vec<f64>) {
    let mut v = Vec::with_capacity(r + 1);
    let mut d = Vec::with_capacity(r + 1);
    v.push(0.5 * (1.0 - x));
    d.push(-0.5);
    v.push(0.5 * (1.0 + x));
    d.push(0.5);
    for j in 2..=r {
        let (b, db) = bubble(j, x);
        v.push(b);
        d.push(db);
    }
    (v, d)
}

/// Continuous piecewise polynomials of degree `r_i` on a y-mesh that vanish
/// at `y = Y`. Dofs: vertex values at all breakpoints but `Y` (vertex `i`
/// has dof `i`), then element bubbles in element order.
#[derive(Debug, Clone)]
pub struct YSpace {
    pub mesh: YMesh,
    pub degrees: DegreeVector,
    local_to_global: Vec<Vec<Option<usize>>>,
    dim: usize,
}

impl YSpace {
    pub fn new(mesh: YMesh, degrees: DegreeVector) -> Result<Self> {
        let ne = mesh.num_elements();
        if degrees.degrees.len() != ne {
            return Err(Error::Parameter(format!("{} degrees for {ne} elements", degrees.degrees.len())));
        }
        if let Some(&r) = degrees.degrees.iter().find(|&&r| r == 0 || r > MAX_DEGREE) {
            return Err(Error::UnsupportedOrder(r));
        }
        let mut next = ne; // vertices 0..ne-1 carry dofs, vertex ne is Y
        let mut map = Vec::with_capacity(ne);
        for (e, &r) in degrees.degrees.iter().enumerate() {
            let mut l = vec![Some(e), if e + 1 < ne { Some(e + 1) } else { None }];
            for _ in 2..=r {
                l.push(Some(next));
                next += 1;
            }
            map.push(l);
        }
        Ok(Self { mesh, degrees, local_to_global: map, dim: next })
    }

    /// Piecewise linears on `mesh`.
    pub fn p1(mesh: YMesh) -> Self {
        let ne = mesh.num_elements();
        Self::new(mesh, DegreeVector::uniform(ne, 1)).expect("degree one is always admissible")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn y_max(&self) -> f64 {
        self.mesh.y_max()
    }

    /// Dof whose coefficient equals the value at `y = 0`.
    pub fn trace_dof(&self) -> usize {
        0
    }

    pub fn element_dofs(&self, e: usize) -> &[Option<usize>] {
        &self.local_to_global[e]
    }

    fn element_eval(&self, coeffs: &[f64], e: usize, y: f64) -> (f64, f64) {
        let (a, b) = self.mesh.element(e);
        let x = 2.0 * (y - a) / (b - a) - 1.0;
        let (v, d) = shape(self.degrees.degrees[e], x);
        let mut val = 0.0;
        let mut der = 0.0;
        for (l, g) in self.local_to_global[e].iter().enumerate() {
            if let Some(g) = g {
                val += coeffs[*g] * v[l];
                der += coeffs[*g] * d[l];
            }
        }
        (val, der * 2.0 / (b - a))
    }

    pub fn eval(&self, coeffs: &[f64], y: f64) -> f64 {
        self.element_eval(coeffs, self.mesh.locate(y), y).0
    }

    pub fn eval_deriv(&self, coeffs: &[f64], y: f64) -> f64 {
        self.element_eval(coeffs, self.mesh.locate(y), y).1
    }

    /// Quadrature for `int_e y^alpha p(y) dy`, exact (up to roundoff) for
    /// polynomials `p` of degree `2 r_e + extra`.
    pub fn element_rule(&self, e: usize, alpha: f64, extra: usize) -> Rule {
        let (a, b) = self.mesh.element(e);
        let r = self.degrees.degrees[e];
        if a == 0.0 {
            weighted_interval_rule(0.0, b, alpha, r + 2 + extra.div_ceil(2))
        } else {
            weighted_interval_rule(a, b, alpha, r + 12 + extra.div_ceil(2))
        }
    }
}

/// Weighted stiffness `S[i][j] = int y^alpha phi_i' phi_j'` and mass
/// `M[i][j] = int y^alpha phi_i phi_j`.
///
/// The element touching zero uses Gauss-Jacobi with weight `y^alpha`; other
/// elements use Gauss-Legendre on geometric sub-pieces (endpoint ratio at
/// most 2) with twelve nodes beyond exactness for the polynomial part.
pub fn assemble_weighted(space: &YSpace, alpha: f64) -> Result<(DenseSym, DenseSym)> {
    if !(alpha > -1.0 && alpha < 1.0) {
        return Err(Error::Parameter(format!("weight exponent {alpha} outside (-1, 1)")));
    }
    let n = space.dim();
    let mut s = DenseSym::zeros(n);
    let mut m = DenseSym::zeros(n);
    for e in 0..space.mesh.num_elements() {
        let (a, b) = space.mesh.element(e);
        let r = space.degrees.degrees[e];
        let rule = space.element_rule(e, alpha, 0);
        let dofs = space.element_dofs(e);
        let mut se = vec![vec![0.0; r + 1]; r + 1];
        let mut me = vec![vec![0.0; r + 1]; r + 1];
        let jac = 2.0 / (b - a);
        for (&y, &w) in rule.nodes.iter().zip(&rule.weights) {
            let x = 2.0 * (y - a) / (b - a) - 1.0;
            let (v, d) = shape(r, x);
            for i in 0..=r {
                for j in i..=r {
                    se[i][j] += w * d[i] * d[j] * jac * jac;
                    me[i][j] += w * v[i] * v[j];
                }
            }
        }
        for i in 0..=r {
            for j in i..=r {
                if let (Some(gi), Some(gj)) = (dofs[i], dofs[j]) {
                    s.add(gi, gj, se[i][j]);
                    m.add(gi, gj, me[i][j]);
                }
            }
        }
    }
    Ok((s, m))
}

/// [`assemble_weighted`] in the telescoped basis where vertex dof `j` is
/// `psi_j = sum_{i <= j} phi_i`, equal to one on `[0, y_j]` and falling
/// linearly to zero across element `j`. Bubbles are unchanged.
///
/// The derivatives of the `psi_j` have disjoint supports, so on geometric
/// meshes both matrices stay well conditioned under diagonal scaling,
/// while the nodal stiffness degrades like the ratio of element sizes.
/// Use [`untelescope`] to return to nodal coefficients.
pub fn assemble_weighted_telescoped(space: &YSpace, alpha: f64) -> Result<(DenseSym, DenseSym)> {
    if !(alpha > -1.0 && alpha < 1.0) {
        return Err(Error::Parameter(format!("weight exponent {alpha} outside (-1, 1)")));
    }
    let n = space.dim();
    let ne = space.mesh.num_elements();
    let mut s = DenseSym::zeros(n);
    let mut m = DenseSym::zeros(n);
    for e in 0..ne {
        let (a, b) = space.mesh.element(e);
        let r = space.degrees.degrees[e];
        let rule = space.element_rule(e, alpha, 0);
        let dofs = space.element_dofs(e);
        // Local functions: psi_e, the constant one, bubbles.
        let mut se = vec![vec![0.0; r + 1]; r + 1];
        let mut me = vec![vec![0.0; r + 1]; r + 1];
        let jac = 2.0 / (b - a);
        for (&y, &w) in rule.nodes.iter().zip(&rule.weights) {
            let x = 2.0 * (y - a) / (b - a) - 1.0;
            let (mut v, mut d) = shape(r, x);
            v[1] = 1.0;
            d[1] = 0.0;
            for i in 0..=r {
                for j in i..=r {
                    se[i][j] += w * d[i] * d[j] * jac * jac;
                    me[i][j] += w * v[i] * v[j];
                }
            }
        }
        let constant: Vec<usize> = (e + 1..ne).collect();
        let mut local: Vec<(usize, &[usize])> = Vec::with_capacity(r + 1);
        let singles: Vec<[usize; 1]> = dofs.iter().map(|d| [d.unwrap_or(usize::MAX)]).collect();
        local.push((0, &singles[0]));
        local.push((1, &constant));
        for (l, single) in singles.iter().enumerate().skip(2) {
            local.push((l, single));
        }
        for (p, (i, gi)) in local.iter().enumerate() {
            for (j, gj) in &local[p..] {
                let (sv, mv) = if i <= j { (se[*i][*j], me[*i][*j]) } else { (se[*j][*i], me[*j][*i]) };
                for &g in gi.iter() {
                    for &h in gj.iter() {
                        if i == j && h < g {
                            continue;
                        }
                        if sv != 0.0 {
                            s.add(g, h, sv);
                        }
                        m.add(g, h, mv);
                    }
                }
            }
        }
    }
    Ok((s, m))
}

/// Nodal coefficients of a vector given in the telescoped basis of
/// [`assemble_weighted_telescoped`].
pub fn untelescope(space: &YSpace, x: &[f64]) -> Vec<f64> {
    let ne = space.mesh.num_elements();
    let mut v = x.to_vec();
    for i in (0..ne.saturating_sub(1)).rev() {
        v[i] += v[i + 1];
    }
    v
}

/// Piecewise polynomial produced by an interpolant, stored elementwise in
/// the hierarchical basis (left value, right value, bubble coefficients).
#[derive(Debug, Clone)]
pub struct YInterpolant {
    pub mesh: YMesh,
    pub local: Vec<Vec<f64>>,
}

impl YInterpolant {
    fn eval_both(&self, y: f64) -> (f64, f64) {
        let e = self.mesh.locate(y);
        let (a, b) = self.mesh.element(e);
        let c = &self.local[e];
        let (v, d) = shape(c.len() - 1, 2.0 * (y - a) / (b - a) - 1.0);
        let val = c.iter().zip(&v).map(|(ci, vi)| ci * vi).sum();
        let der: f64 = c.iter().zip(&d).map(|(ci, di)| ci * di).sum();
        (val, der * 2.0 / (b - a))
    }

    pub fn eval(&self, y: f64) -> f64 {
        self.eval_both(y).0
    }

    pub fn eval_deriv(&self, y: f64) -> f64 {
        self.eval_both(y).1
    }

    /// Left and right limits at each interior breakpoint.
    pub fn jumps(&self) -> Vec<f64> {
        (0..self.local.len() - 1).map(|e| self.local[e][1] - self.local[e + 1][0]).collect()
    }

    /// Coefficients in `space`; requires the same mesh, degrees no larger
    /// than the space's and a zero value at `Y`.
    pub fn to_space_coefficients(&self, space: &YSpace) -> Result<Vec<f64>> {
        if space.mesh.breakpoints != self.mesh.breakpoints {
            return Err(Error::Parameter("interpolant and space live on different meshes".into()));
        }
        let last = self.local.last().unwrap();
        if last[1] != 0.0 {
            return Err(Error::Parameter("interpolant does not vanish at Y".into()));
        }
        let mut out = vec![0.0; space.dim()];
        for (e, c) in self.local.iter().enumerate() {
            let dofs = space.element_dofs(e);
            if c.len() > dofs.len() {
                return Err(Error::Parameter(format!("element {e}: degree {} above space degree", c.len() - 1)));
            }
            for (l, v) in c.iter().enumerate() {
                if let Some(g) = dofs[l] {
                    out[g] = *v;
                }
            }
        }
        Ok(out)
    }

    /// `(||u - I u||, ||u' - (I u)'||)` in `L^2(y^alpha, (lo, hi))`.
    pub fn weighted_errors(
        &self,
        u: impl Fn(f64) -> f64,
        du: impl Fn(f64) -> f64,
        alpha: f64,
        lo: f64,
        hi: f64,
    ) -> (f64, f64) {
        let mut l2 = 0.0;
        let mut h1 = 0.0;
        for e in 0..self.mesh.num_elements() {
            let (a, b) = self.mesh.element(e);
            let (a, b) = (a.max(lo), b.min(hi));
            if b <= a {
                continue;
            }
            let rule = weighted_interval_rule(a, b, alpha, 40);
            for (&y, &w) in rule.nodes.iter().zip(&rule.weights) {
                let (v, d) = self.eval_both(y);
                l2 += w * (u(y) - v).powi(2);
                h1 += w * (du(y) - d).powi(2);
            }
        }
        (l2.sqrt(), h1.sqrt())
    }
}

/// Local hierarchical coefficients of the Gauss-Lobatto interpolant of
/// degree `r` on `[a, b]`.
fn lobatto_local(u: &dyn Fn(f64) -> f64, a: f64, b: f64, r: usize) -> Vec<f64> {
    if r == 1 {
        return vec![u(a), u(b)];
    }
    let nodes = gauss_lobatto(r + 1).nodes;
    let mut vm = DMatrix::<f64>::zeros(r + 1, r + 1);
    let mut rhs = DVector::<f64>::zeros(r + 1);
    for (i, &x) in nodes.iter().enumerate() {
        let (v, _) = shape(r, x);
        for (j, vj) in v.iter().enumerate() {
            vm[(i, j)] = *vj;
        }
        rhs[i] = u(a + 0.5 * (x + 1.0) * (b - a));
    }
    let sol = vm.lu().solve(&rhs).expect("Lobatto interpolation matrix is nonsingular");
    let mut c: Vec<f64> = sol.iter().copied().collect();
    // endpoints are interpolated exactly; pin them to the sampled values
    c[0] = rhs[0];
    c[1] = rhs[r];
    c
}

fn first_element_line(u: &dyn Fn(f64) -> f64, y1: f64) -> Vec<f64> {
    let mid = u(0.5 * y1);
    let right = u(y1);
    vec![2.0 * mid - right, right]
}

/// Piecewise linear interpolant: nodal on all elements except the first,
/// where the line through `(y_1/2, u(y_1/2))` and `(y_1, u(y_1))` is used.
/// With `terminal`, the value at `Y` is set to zero on the last element.
pub fn interp_pi1(mesh: &YMesh, u: impl Fn(f64) -> f64, terminal: bool) -> YInterpolant {
    let ne = mesh.num_elements();
    let degrees = DegreeVector::uniform(ne, 1);
    build_interpolant(mesh, &degrees, &u, terminal)
}

/// Elementwise Gauss-Lobatto interpolant of degree `r_i`, with the first
/// element treated as in [`interp_pi1`] and optional terminal zeroing.
pub fn interp_hp(mesh: &YMesh, degrees: &DegreeVector, u: impl Fn(f64) -> f64, terminal: bool) -> Result<YInterpolant> {
    if degrees.degrees.len() != mesh.num_elements() {
        return Err(Error::Parameter("degree vector length differs from element count".into()));
    }
    Ok(build_interpolant(mesh, degrees, &u, terminal))
}

fn build_interpolant(mesh: &YMesh, degrees: &DegreeVector, u: &dyn Fn(f64) -> f64, terminal: bool) -> YInterpolant {
    let ne = mesh.num_elements();
    let mut local = Vec::with_capacity(ne);
    for e in 0..ne {
        let (a, b) = mesh.element(e);
        local.push(if e == 0 { first_element_line(u, b) } else { lobatto_local(u, a, b, degrees.degrees[e]) });
    }
    if terminal {
        local[ne - 1][1] = 0.0;
    }
    YInterpolant { mesh: mesh.clone(), local }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::gen_sym_eig;
    use crate::quadrature::left_weighted;

    #[test]
    fn radical_geometric_examples() {
        let m = radical_geometric_mesh(2.0, 0.5, std::f64::consts::E).unwrap();
        let want = [0.0, 0.25, 1.0, 0.5f64.exp(), std::f64::consts::E];
        assert_eq!(m.breakpoints.len(), want.len());
        for (a, b) in m.breakpoints.iter().zip(&want) {
            assert!((a - b).abs() < 1e-15);
        }
        let m = radical_geometric_mesh(1.0, 0.25, 3.0).unwrap();
        assert_eq!(&m.breakpoints[..5], &[0.0, 0.25, 0.5, 0.75, 1.0]);
        assert!(radical_geometric_mesh(2.0, 0.3, 3.0).is_err());
        // element count N + floor(N log Y)
        let m = radical_geometric_mesh(3.0, 0.125, 5.0).unwrap();
        assert_eq!(m.num_elements(), 8 + (8.0 * 5f64.ln()).floor() as usize);
    }

    #[test]
    fn radical_geometric_nested() {
        for l in 1..6 {
            let c = radical_geometric_mesh(4.0, 0.5f64.powi(l), 3.3).unwrap();
            let f = radical_geometric_mesh(4.0, 0.5f64.powi(l + 1), 3.3).unwrap();
            assert!(c.is_nested_in(&f));
        }
    }

    #[test]
    fn geometric_examples() {
        assert_eq!(geometric_mesh(0.5, 3, 1.0).unwrap().breakpoints, vec![0.0, 0.25, 0.5, 1.0]);
        let m = geometric_mesh(0.05, 2, 2.0).unwrap();
        assert!((m.breakpoints[1] - 0.1).abs() < 1e-16);
        assert_eq!(geometric_mesh(0.3, 1, 2.0).unwrap().breakpoints, vec![0.0, 2.0]);
    }

    #[test]
    fn degree_vectors() {
        assert_eq!(DegreeVector::linear(4, 2.0).degrees, vec![2, 4, 6, 8]);
        assert_eq!(DegreeVector::linear(3, 0.4).degrees, vec![1, 1, 2]);
    }

    #[test]
    fn single_element_matrices() {
        for &alpha in &[-0.5, 0.0, 0.4] {
            let y = 2.5f64;
            let sp = YSpace::p1(geometric_mesh(0.5, 1, y).unwrap());
            let (s, m) = assemble_weighted(&sp, alpha).unwrap();
            let s_exact = y.powf(alpha - 1.0) / (alpha + 1.0);
            let m_exact = 2.0 * y.powf(alpha + 1.0) / ((alpha + 1.0) * (alpha + 2.0) * (alpha + 3.0));
            assert!((s.get(0, 0) / s_exact - 1.0).abs() < 1e-13);
            assert!((m.get(0, 0) / m_exact - 1.0).abs() < 1e-13);
            let e = gen_sym_eig(&m, &s).unwrap();
            let mu = 2.0 * y * y / ((alpha + 2.0) * (alpha + 3.0));
            assert!((e.values[0] / mu - 1.0).abs() < 1e-13);
        }
    }

    #[test]
    fn unweighted_two_element_matrices() {
        let mesh = YMesh { kind: YMeshKind::Geometric { sigma: 0.5, m: 2, y_max: 1.0 }, breakpoints: vec![0.0, 0.5, 1.0] };
        let sp = YSpace::p1(mesh);
        let (s, m) = assemble_weighted(&sp, 0.0).unwrap();
        let h = 0.5;
        assert!((s.get(0, 0) - 1.0 / h).abs() < 1e-14);
        assert!((s.get(0, 1) + 1.0 / h).abs() < 1e-14);
        assert!((s.get(1, 1) - 2.0 / h).abs() < 1e-14);
        assert!((m.get(0, 0) - h / 3.0).abs() < 1e-14);
        assert!((m.get(0, 1) - h / 6.0).abs() < 1e-14);
        assert!((m.get(1, 1) - 2.0 * h / 3.0).abs() < 1e-14);
    }

    #[test]
    fn first_element_against_high_order_jacobi() {
        let alpha = 0.5;
        let mesh = geometric_mesh(0.3, 3, 1.7).unwrap();
        let sp = YSpace::new(mesh.clone(), DegreeVector::linear(3, 2.0)).unwrap();
        let (s, m) = assemble_weighted(&sp, alpha).unwrap();
        // element 0 carries dof 0 (left), dof 1 (right), bubbles 3 (deg 2)
        let (a, b) = mesh.element(0);
        let rule = left_weighted(40, alpha, b);
        let dofs = [0usize, 1, 3];
        for i in 0..3 {
            for j in 0..3 {
                let (mut se, mut me) = (0.0, 0.0);
                for (&y, &w) in rule.nodes.iter().zip(&rule.weights) {
                    let (v, d) = shape(2, 2.0 * (y - a) / (b - a) - 1.0);
                    se += w * d[i] * d[j] * 4.0 / (b - a).powi(2);
                    me += w * v[i] * v[j];
                }
                // dof 1 also collects element 1; compare only pure element-0 entries
                if dofs[i] == 1 || dofs[j] == 1 {
                    continue;
                }
                assert!((s.get(dofs[i], dofs[j]) - se).abs() < 1e-13 * se.abs().max(1.0));
                assert!((m.get(dofs[i], dofs[j]) - me).abs() < 1e-13 * me.abs().max(1e-3));
            }
        }
    }

    #[test]
    fn mass_matches_monomial_moments() {
        // u = sum of all basis functions; int y^alpha u^2 from moments of the
        // piecewise polynomial expanded in monomials on each element
        let alpha = -0.3;
        let mesh = geometric_mesh(0.2, 4, 3.0).unwrap();
        let sp = YSpace::new(mesh.clone(), DegreeVector::linear(4, 1.0)).unwrap();
        let (_, m) = assemble_weighted(&sp, alpha).unwrap();
        let c: Vec<f64> = (0..sp.dim()).map(|i| ((i * 37 % 11) as f64) - 5.0).collect();
        let quad: f64 = (0..sp.dim()).map(|i| (0..sp.dim()).map(|j| c[i] * m.get(i, j) * c[j]).sum::<f64>()).sum();
        let mut exact = 0.0;
        for e in 0..mesh.num_elements() {
            let (a, b) = mesh.element(e);
            let r = sp.degrees.degrees[e];
            // sample u^2 (degree 2r) at 2r+1 points and fit monomials
            let deg = 2 * r;
            let pts: Vec<f64> = (0..=deg).map(|i| a + (b - a) * (i as f64 + 0.5) / (deg as f64 + 1.0)).collect();
            let vm = DMatrix::from_fn(deg + 1, deg + 1, |i, j| ((pts[i] - a) / (b - a)).powi(j as i32));
            let rhs = DVector::from_fn(deg + 1, |i, _| sp.eval(&c, pts[i]).powi(2));
            let coef = vm.lu().solve(&rhs).unwrap();
            // int_a^b y^alpha ((y-a)/(b-a))^n dy by binomial expansion when a > 0,
            // closed form when a = 0
            for n in 0..=deg {
                let moment = if a == 0.0 {
                    b.powf(alpha + 1.0) / (n as f64 + alpha + 1.0)
                } else {
                    let mut acc = 0.0;
                    let mut binom = 1.0;
                    for k in 0..=n {
                        let p = k as f64 + alpha + 1.0;
                        acc += binom * (-a).powi((n - k) as i32) * (b.powf(p) - a.powf(p)) / p;
                        binom *= (n - k) as f64 / (k + 1) as f64;
                    }
                    acc / (b - a).powi(n as i32)
                };
                exact += coef[n] * moment;
            }
        }
        assert!((quad / exact - 1.0).abs() < 1e-10, "{quad} vs {exact}");
    }

    #[test]
    fn interpolant_examples() {
        let mesh = radical_geometric_mesh(2.0, 0.25, 3.0).unwrap();
        let line = |y: f64| 2.0 * y - 1.0;
        let i1 = interp_pi1(&mesh, line, false);
        for y in [0.0, 0.01, 0.3, 1.7, 3.0] {
            assert!((i1.eval(y) - line(y)).abs() < 1e-14);
        }
        let i2 = interp_pi1(&mesh, |_| 3.0, true);
        assert_eq!(i2.eval(3.0), 0.0);
        let gm = geometric_mesh(0.3, 4, 2.0).unwrap();
        let dv = DegreeVector::linear(4, 2.0);
        let cubic = |y: f64| y * y * y - y + 0.5;
        let ih = interp_hp(&gm, &dv, cubic, false).unwrap();
        for y in [0.1, 0.5, 1.3, 1.99] {
            if y >= gm.breakpoints[1] {
                assert!((ih.eval(y) - cubic(y)).abs() < 1e-13);
            }
        }
        assert!(ih.jumps().iter().all(|j| j.abs() < 1e-13));
    }

    #[test]
    fn interpolant_to_space() {
        let gm = geometric_mesh(0.3, 3, 2.0).unwrap();
        let dv = DegreeVector::linear(3, 2.0);
        let sp = YSpace::new(gm.clone(), dv.clone()).unwrap();
        let ih = interp_hp(&gm, &dv, |y| (2.0 - y) * y.sin(), true).unwrap();
        let c = ih.to_space_coefficients(&sp).unwrap();
        for y in [0.0, 0.05, 0.3, 1.0, 1.9] {
            assert!((sp.eval(&c, y) - ih.eval(y)).abs() < 1e-13);
        }
    }

    #[test]
    fn pi1_rate_for_singular_profile() {
        let s = 0.4;
        let alpha = 1.0 - 2.0 * s;
        let u = |y: f64| y.powf(2.0 * s);
        let du = |y: f64| 2.0 * s * y.powf(2.0 * s - 1.0);
        let err = |k: f64| {
            let mesh = radical_geometric_mesh(2.0 / s, k, 2.0).unwrap();
            interp_pi1(&mesh, u, false).weighted_errors(u, du, alpha, 0.0, 1.0).0
        };
        let rate = (err(1.0 / 8.0) / err(1.0 / 16.0)).log2();
        assert!(rate >= 1.8, "rate {rate}");
    }

    #[test]
    fn telescoped_matrices_are_a_congruence() {
        let alpha = -0.3;
        let sp = YSpace::new(geometric_mesh(0.4, 4, 2.0).unwrap(), DegreeVector::linear(4, 1.0)).unwrap();
        let (s, m) = assemble_weighted(&sp, alpha).unwrap();
        let (st, mt) = assemble_weighted_telescoped(&sp, alpha).unwrap();
        let n = sp.dim();
        let cols: Vec<Vec<f64>> = (0..n)
            .map(|j| {
                let mut e = vec![0.0; n];
                e[j] = 1.0;
                untelescope(&sp, &e)
            })
            .collect();
        for i in 0..n {
            let (si, mi) = (s.mul_vec(&cols[i]), m.mul_vec(&cols[i]));
            for j in 0..n {
                let sij: f64 = cols[j].iter().zip(&si).map(|(a, b)| a * b).sum();
                let mij: f64 = cols[j].iter().zip(&mi).map(|(a, b)| a * b).sum();
                assert!((sij - st.get(i, j)).abs() < 1e-11 * (1.0 + sij.abs()), "S {i} {j}");
                assert!((mij - mt.get(i, j)).abs() < 1e-12 * (1.0 + mij.abs()), "M {i} {j}");
            }
        }
    }
}
