//! hp finite elements on an interval with zero boundary values.

use crate::error::{Error, Result};
use crate::fem_y::{shape, MAX_DEGREE};
use crate::linalg::{SparseSym, TripletBuilder};
use crate::problem::Coefficients;
use crate::quadrature::gauss_legendre;

use super::PreparedForcing;

/// Continuous piecewise polynomials of uniform degree `q` on the mesh
/// `breakpoints`, vanishing at both ends. Dofs: interior vertices in
/// order, then element bubbles in element order.
#[derive(Debug, Clone)]
pub struct IntervalSpace {
    pub breakpoints: Vec<f64>,
    pub degree: usize,
    /// Layers of geometric refinement at each end (0 for uniform meshes).
    pub layers: usize,
    local_to_global: Vec<Vec<Option<usize>>>,
    dim: usize,
}

impl IntervalSpace {
    pub fn new(breakpoints: Vec<f64>, degree: usize) -> Result<Self> {
        if breakpoints.len() < 2 || breakpoints.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Parameter("interval mesh breakpoints must increase".into()));
        }
        if degree == 0 || degree > MAX_DEGREE {
            return Err(Error::UnsupportedOrder(degree));
        }
        let ne = breakpoints.len() - 1;
        let vertex = |v: usize| if v == 0 || v == ne { None } else { Some(v - 1) };
        let mut next = ne - 1;
        let mut map = Vec::with_capacity(ne);
        for e in 0..ne {
            let mut l = vec![vertex(e), vertex(e + 1)];
            for _ in 2..=degree {
                l.push(Some(next));
                next += 1;
            }
            map.push(l);
        }
        Ok(Self { breakpoints, degree, layers: 0, local_to_global: map, dim: next })
    }

    pub fn uniform(a: f64, b: f64, elements: usize, degree: usize) -> Result<Self> {
        if elements == 0 {
            return Err(Error::Parameter("need at least one element".into()));
        }
        let pts = (0..=elements).map(|i| a + (b - a) * i as f64 / elements as f64).collect();
        Self::new(pts, degree)
    }

    pub fn num_elements(&self) -> usize {
        self.breakpoints.len() - 1
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn element(&self, e: usize) -> (f64, f64) {
        (self.breakpoints[e], self.breakpoints[e + 1])
    }

    /// Smallest element length.
    pub fn h_min(&self) -> f64 {
        self.breakpoints.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min)
    }

    pub fn h_max(&self) -> f64 {
        self.breakpoints.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
    }

    /// Returns `(K, C, M)` with Gauss-Legendre rules of `q + 2` points.
    pub fn assemble(&self, coeff: &Coefficients) -> Result<(SparseSym, SparseSym, SparseSym)> {
        let n = self.dim;
        let nl = self.degree + 1;
        let cap = nl * nl * self.num_elements();
        let (mut kb, mut cb, mut mb) =
            (TripletBuilder::with_capacity(n, cap), TripletBuilder::with_capacity(n, cap), TripletBuilder::with_capacity(n, cap));
        let gl = gauss_legendre(self.degree + 2);
        let tab: Vec<(Vec<f64>, Vec<f64>)> = gl.nodes.iter().map(|&x| shape(self.degree, x)).collect();
        for e in 0..self.num_elements() {
            let (a, b) = self.element(e);
            let jac = 0.5 * (b - a);
            let mut kl = vec![vec![0.0; nl]; nl];
            let mut cl = vec![vec![0.0; nl]; nl];
            let mut ml = vec![vec![0.0; nl]; nl];
            for (q, (&x, &w)) in gl.nodes.iter().zip(&gl.weights).enumerate() {
                let y = a + jac * (x + 1.0);
                let pt = [y, 0.0];
                coeff.check_at(pt)?;
                let av = coeff.diffusion_at(pt)[0][0];
                let cv = coeff.reaction_at(pt);
                let (v, d) = &tab[q];
                for i in 0..nl {
                    for j in 0..nl {
                        kl[i][j] += w * av * d[i] * d[j] / jac;
                        cl[i][j] += w * cv * v[i] * v[j] * jac;
                        ml[i][j] += w * v[i] * v[j] * jac;
                    }
                }
            }
            let dofs = &self.local_to_global[e];
            for i in 0..nl {
                let Some(gi) = dofs[i] else { continue };
                for j in 0..nl {
                    let Some(gj) = dofs[j] else { continue };
                    if gj >= gi {
                        kb.add(gi, gj, kl[i][j]);
                        cb.add(gi, gj, cl[i][j]);
                        mb.add(gi, gj, ml[i][j]);
                    }
                }
            }
        }
        Ok((kb.finalize_keep_pattern(), cb.finalize_keep_pattern(), mb.finalize_keep_pattern()))
    }

    /// `b_j = int f phi_j` with `max(q + 3, 4)` Gauss-Legendre points.
    pub fn load(&self, f: &PreparedForcing) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.dim];
        if f.is_zero() {
            return Ok(out);
        }
        let gl = gauss_legendre((self.degree + 3).max(4));
        let tab: Vec<Vec<f64>> = gl.nodes.iter().map(|&x| shape(self.degree, x).0).collect();
        for e in 0..self.num_elements() {
            let (a, b) = self.element(e);
            let jac = 0.5 * (b - a);
            for (q, (&x, &w)) in gl.nodes.iter().zip(&gl.weights).enumerate() {
                let fv = f.eval([a + jac * (x + 1.0), 0.0])? * w * jac;
                for (l, g) in self.local_to_global[e].iter().enumerate() {
                    if let Some(g) = g {
                        out[*g] += fv * tab[q][l];
                    }
                }
            }
        }
        Ok(out)
    }

    pub fn eval(&self, coeffs: &[f64], x: f64) -> f64 {
        let ne = self.num_elements();
        if x <= self.breakpoints[0] || x >= self.breakpoints[ne] {
            return 0.0;
        }
        let e = self.breakpoints.partition_point(|&b| b <= x).saturating_sub(1).min(ne - 1);
        let (a, b) = self.element(e);
        let (v, _) = shape(self.degree, 2.0 * (x - a) / (b - a) - 1.0);
        self.local_to_global[e].iter().zip(&v).map(|(g, s)| g.map_or(0.0, |g| coeffs[g] * s)).sum()
    }

    /// Coefficients of the nodal interpolant of `g` (bubbles zero).
    pub fn interpolate_p1(&self, g: impl Fn(f64) -> f64) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for v in 1..self.num_elements() {
            out[v - 1] = g(self.breakpoints[v]);
        }
        out
    }
}

/// Number of geometric layers so that `sigma^L <= epsilon`.
pub fn boundary_layer_count(epsilon: f64, sigma: f64) -> Result<usize> {
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(Error::Parameter(format!("layer width {epsilon} outside (0, 1]")));
    }
    if !(sigma > 0.0 && sigma < 1.0) {
        return Err(Error::Parameter(format!("grading factor {sigma} outside (0, 1)")));
    }
    let l = epsilon.ln() / sigma.ln();
    Ok((l - 1e-9).ceil().max(0.0) as usize)
}

/// hp space on `(a, b)` whose mesh is the image of
/// `0, sigma^L, ..., sigma, 1, 2 - sigma, ..., 2 - sigma^L, 2` under the
/// affine map `(0, 2) -> (a, b)`.
pub fn hp_interval_space(a: f64, b: f64, epsilon_min: f64, q: usize, sigma: f64) -> Result<IntervalSpace> {
    if !(b > a) {
        return Err(Error::Parameter(format!("empty interval ({a}, {b})")));
    }
    let l = boundary_layer_count(epsilon_min, sigma)?;
    let mut t = vec![0.0];
    for j in (1..=l).rev() {
        t.push(sigma.powi(j as i32));
    }
    t.push(1.0);
    for j in 1..=l {
        t.push(2.0 - sigma.powi(j as i32));
    }
    t.push(2.0);
    let pts = t.into_iter().map(|x| a + 0.5 * (b - a) * x).collect();
    let mut sp = IntervalSpace::new(pts, q)?;
    sp.layers = l;
    Ok(sp)
}
