//! Continuous piecewise linears on a triangulation, zero on the boundary.

use crate::error::{Error, Result};
use crate::linalg::{SparseSym, TripletBuilder};
use crate::problem::{Coefficients, Diffusion, Point, Reaction};
use crate::quadrature::triangle_rule;

use super::trimesh::TriMesh;
use super::PreparedForcing;

#[derive(Debug, Clone)]
pub struct P1Space {
    pub mesh: TriMesh,
    /// `dof[v]` is `Some(i)` for interior vertices.
    pub dof: Vec<Option<usize>>,
    dim: usize,
}

struct Local {
    area: f64,
    /// Gradients of the barycentric coordinates.
    grads: [[f64; 2]; 3],
    points: [Point; 3],
}

impl P1Space {
    pub fn new(mesh: TriMesh) -> Self {
        let mut dim = 0;
        let dof = mesh
            .boundary_vertex
            .iter()
            .map(|&b| {
                if b {
                    None
                } else {
                    dim += 1;
                    Some(dim - 1)
                }
            })
            .collect();
        Self { mesh, dof, dim }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn local(&self, t: usize) -> Local {
        let [a, b, c] = self.mesh.triangles[t];
        let p = [self.mesh.vertices[a], self.mesh.vertices[b], self.mesh.vertices[c]];
        let det = (p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1]);
        let mut grads = [[0.0; 2]; 3];
        for k in 0..3 {
            let (q, r) = (p[(k + 1) % 3], p[(k + 2) % 3]);
            grads[k] = [(q[1] - r[1]) / det, (r[0] - q[0]) / det];
        }
        Local { area: 0.5 * det, grads, points: p }
    }

    /// Returns `(K, C, M)`: diffusion stiffness, reaction mass and plain
    /// mass, all on the same sparsity pattern.
    pub fn assemble(&self, coeff: &Coefficients) -> Result<(SparseSym, SparseSym, SparseSym)> {
        let n = self.dim;
        let cap = 9 * self.mesh.num_triangles();
        let (mut kb, mut cb, mut mb) =
            (TripletBuilder::with_capacity(n, cap), TripletBuilder::with_capacity(n, cap), TripletBuilder::with_capacity(n, cap));
        for t in 0..self.mesh.num_triangles() {
            let loc = self.local(t);
            let mids: [Point; 3] = std::array::from_fn(|k| {
                let (q, r) = (loc.points[(k + 1) % 3], loc.points[(k + 2) % 3]);
                [0.5 * (q[0] + r[0]), 0.5 * (q[1] + r[1])]
            });
            // the edge-midpoint rule is exact for quadratics
            let amat = match &coeff.diffusion {
                Diffusion::Constant(a) => *a,
                Diffusion::Field(_) => {
                    let mut acc = [[0.0; 2]; 2];
                    for m in &mids {
                        coeff.check_at(*m)?;
                        let a = coeff.diffusion_at(*m);
                        for i in 0..2 {
                            for j in 0..2 {
                                acc[i][j] += a[i][j] / 3.0;
                            }
                        }
                    }
                    acc
                }
            };
            let mut cloc = [[0.0; 3]; 3];
            match &coeff.reaction {
                Reaction::Constant(c) => {
                    for (i, row) in cloc.iter_mut().enumerate() {
                        for (j, v) in row.iter_mut().enumerate() {
                            *v = c * loc.area / if i == j { 6.0 } else { 12.0 };
                        }
                    }
                }
                Reaction::Field(_) => {
                    // barycentric coordinates at edge midpoint k: 0 at k, 1/2 elsewhere
                    for (k, m) in mids.iter().enumerate() {
                        let c = coeff.reaction_at(*m);
                        if !(c >= 0.0) {
                            return Err(Error::Parameter(format!("reaction coefficient {c} negative at {m:?}")));
                        }
                        for i in 0..3 {
                            for j in 0..3 {
                                let (li, lj) = (if i == k { 0.0 } else { 0.5 }, if j == k { 0.0 } else { 0.5 });
                                cloc[i][j] += c * loc.area / 3.0 * li * lj;
                            }
                        }
                    }
                }
            }
            let tri = self.mesh.triangles[t];
            for i in 0..3 {
                let Some(gi) = self.dof[tri[i]] else { continue };
                for j in 0..3 {
                    let Some(gj) = self.dof[tri[j]] else { continue };
                    if gj < gi {
                        continue;
                    }
                    let (a, b) = (loc.grads[i], loc.grads[j]);
                    let ab = [amat[0][0] * b[0] + amat[0][1] * b[1], amat[1][0] * b[0] + amat[1][1] * b[1]];
                    kb.add(gi, gj, loc.area * (a[0] * ab[0] + a[1] * ab[1]));
                    cb.add(gi, gj, cloc[i][j]);
                    mb.add(gi, gj, loc.area / if i == j { 6.0 } else { 12.0 });
                }
            }
        }
        Ok((kb.finalize_keep_pattern(), cb.finalize_keep_pattern(), mb.finalize_keep_pattern()))
    }

    /// `b_j = int f phi_j` with a degree-5 collapsed rule per triangle.
    pub fn load(&self, f: &PreparedForcing) -> Result<Vec<f64>> {
        let mut b = vec![0.0; self.dim];
        if f.is_zero() {
            return Ok(b);
        }
        let rule = triangle_rule(3);
        for t in 0..self.mesh.num_triangles() {
            let loc = self.local(t);
            let tri = self.mesh.triangles[t];
            if tri.iter().all(|&v| self.dof[v].is_none()) {
                continue;
            }
            let (p0, p1, p2) = (loc.points[0], loc.points[1], loc.points[2]);
            for (q, w) in rule.points.iter().zip(&rule.weights) {
                let lam = [1.0 - q[0] - q[1], q[0], q[1]];
                let x = [
                    lam[0] * p0[0] + lam[1] * p1[0] + lam[2] * p2[0],
                    lam[0] * p0[1] + lam[1] * p1[1] + lam[2] * p2[1],
                ];
                let fv = f.eval(x)? * w * 2.0 * loc.area;
                for k in 0..3 {
                    if let Some(g) = self.dof[tri[k]] {
                        b[g] += fv * lam[k];
                    }
                }
            }
        }
        Ok(b)
    }

    /// Nodal values on all mesh vertices (zero on the boundary).
    pub fn vertex_values(&self, coeffs: &[f64]) -> Vec<f64> {
        self.dof.iter().map(|d| d.map_or(0.0, |i| coeffs[i])).collect()
    }

    /// Interpolates `g` at the interior vertices.
    pub fn interpolate(&self, g: impl Fn(Point) -> f64) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for (v, d) in self.dof.iter().enumerate() {
            if let Some(i) = d {
                out[*i] = g(self.mesh.vertices[v]);
            }
        }
        out
    }

    /// Point evaluation; `None` outside the mesh.
    pub fn eval(&self, coeffs: &[f64], x: Point) -> Option<f64> {
        for t in 0..self.mesh.num_triangles() {
            let loc = self.local(t);
            let p0 = loc.points[0];
            let d = [x[0] - p0[0], x[1] - p0[1]];
            let l1 = loc.grads[1][0] * d[0] + loc.grads[1][1] * d[1];
            let l2 = loc.grads[2][0] * d[0] + loc.grads[2][1] * d[1];
            let lam = [1.0 - l1 - l2, l1, l2];
            if lam.iter().all(|&l| l >= -1e-12) {
                let tri = self.mesh.triangles[t];
                return Some((0..3).map(|k| lam[k] * self.dof[tri[k]].map_or(0.0, |i| coeffs[i])).sum());
            }
        }
        None
    }
}
