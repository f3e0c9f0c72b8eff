//! Conforming triangulations of polygons refined by newest-vertex
//! bisection, with distance-based grading toward corners.

use std::collections::{HashMap, HashSet};
use std::io::Write;

use crate::error::{Error, Result};
use crate::problem::{DomainKind, DomainSpec, Point};

fn sub(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1]]
}

fn cross(a: Point, b: Point) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

fn orient(a: Point, b: Point, c: Point) -> f64 {
    cross(sub(b, a), sub(c, a))
}

fn norm(a: Point) -> f64 {
    a[0].hypot(a[1])
}

fn edge_key(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

/// Grading toward one corner: element sizes follow
/// `h * max(dist / diam, h^{1/(1-beta)})^beta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CornerGrading {
    pub point: Point,
    pub beta: f64,
}

/// `beta = max(0, 1 - pi / omega + 0.05)` at every corner of `domain`.
pub fn default_grading(domain: &DomainSpec) -> Vec<CornerGrading> {
    domain
        .corners
        .iter()
        .map(|c| CornerGrading { point: c.point, beta: (1.0 - std::f64::consts::PI / c.angle + 0.05).max(0.0) })
        .collect()
}

/// Triangle mesh; each triangle is stored as `[newest, b, c]`, positively
/// oriented, with refinement edge `(b, c)`.
#[derive(Debug, Clone)]
pub struct TriMesh {
    pub vertices: Vec<Point>,
    pub triangles: Vec<[usize; 3]>,
    pub generation: Vec<u32>,
    pub boundary_vertex: Vec<bool>,
    polygon: Vec<Point>,
    diameter: f64,
}

impl TriMesh {
    /// Triangulates the polygon by ear clipping followed by Lawson edge
    /// flips (Delaunay subject to the boundary edges). The newest vertex of
    /// each coarse triangle is placed opposite its longest edge.
    pub fn coarse(domain: &DomainSpec) -> Result<Self> {
        if domain.dim() != 2 {
            return Err(Error::UnsupportedDomain("triangulation needs a two-dimensional domain".into()));
        }
        domain.validate()?;
        let poly = domain.vertices();
        let mut tris = ear_clip(&poly)?;
        lawson_flips(&poly, &mut tris);
        let triangles = tris.into_iter().map(|t| longest_edge_first(&poly, t)).collect::<Vec<_>>();
        let n_tri = triangles.len();
        let mut mesh = TriMesh {
            vertices: poly.clone(),
            triangles,
            generation: vec![0; n_tri],
            boundary_vertex: vec![],
            polygon: poly,
            diameter: domain.diameter(),
        };
        mesh.update_boundary();
        Ok(mesh)
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t];
        0.5 * orient(self.vertices[a], self.vertices[b], self.vertices[c])
    }

    /// Size measure `sqrt(2 |K|)` (the leg length of a right isosceles
    /// triangle).
    pub fn size(&self, t: usize) -> f64 {
        (2.0 * self.area(t)).sqrt()
    }

    pub fn h_max(&self) -> f64 {
        (0..self.num_triangles()).map(|t| self.size(t)).fold(0.0, f64::max)
    }

    pub fn h_min(&self) -> f64 {
        (0..self.num_triangles()).map(|t| self.size(t)).fold(f64::INFINITY, f64::min)
    }

    pub fn min_angle(&self) -> f64 {
        let mut m = f64::INFINITY;
        for tri in &self.triangles {
            for k in 0..3 {
                let p = self.vertices[tri[k]];
                let u = sub(self.vertices[tri[(k + 1) % 3]], p);
                let v = sub(self.vertices[tri[(k + 2) % 3]], p);
                let ang = cross(u, v).abs().atan2(u[0] * v[0] + u[1] * v[1]);
                m = m.min(ang);
            }
        }
        m
    }

    fn update_boundary(&mut self) {
        let mut count: HashMap<(usize, usize), u32> = HashMap::new();
        for tri in &self.triangles {
            for k in 0..3 {
                *count.entry(edge_key(tri[k], tri[(k + 1) % 3])).or_default() += 1;
            }
        }
        let mut flag = vec![false; self.vertices.len()];
        for ((a, b), c) in count {
            if c == 1 {
                flag[a] = true;
                flag[b] = true;
            }
        }
        self.boundary_vertex = flag;
    }

    /// Bisects every triangle in `marked` plus the closure needed to keep
    /// the mesh conforming.
    pub fn refine(&mut self, marked: &[usize]) {
        let mut edges: HashSet<(usize, usize)> = HashSet::new();
        for &t in marked {
            let [_, b, c] = self.triangles[t];
            edges.insert(edge_key(b, c));
        }
        // closure: a triangle with any marked edge must bisect its refinement edge
        loop {
            let mut changed = false;
            for tri in &self.triangles {
                let refe = edge_key(tri[1], tri[2]);
                if edges.contains(&refe) {
                    continue;
                }
                if edges.contains(&edge_key(tri[0], tri[1])) || edges.contains(&edge_key(tri[2], tri[0])) {
                    edges.insert(refe);
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        let mut midpoints: HashMap<(usize, usize), usize> = HashMap::new();
        let mut out_tris = Vec::with_capacity(self.triangles.len() * 2);
        let mut out_gen = Vec::with_capacity(self.triangles.len() * 2);
        let mut stack: Vec<([usize; 3], u32)> = Vec::new();
        let old_tris = std::mem::take(&mut self.triangles);
        let old_gen = std::mem::take(&mut self.generation);
        for (tri, g) in old_tris.into_iter().zip(old_gen) {
            stack.push((tri, g));
            while let Some((tri, g)) = stack.pop() {
                let [a, b, c] = tri;
                let key = edge_key(b, c);
                if !edges.contains(&key) {
                    out_tris.push(tri);
                    out_gen.push(g);
                    continue;
                }
                let m = *midpoints.entry(key).or_insert_with(|| {
                    let (pb, pc) = (self.vertices[b], self.vertices[c]);
                    self.vertices.push([0.5 * (pb[0] + pc[0]), 0.5 * (pb[1] + pc[1])]);
                    self.vertices.len() - 1
                });
                stack.push(([m, c, a], g + 1));
                stack.push(([m, a, b], g + 1));
            }
        }
        self.triangles = out_tris;
        self.generation = out_gen;
        self.update_boundary();
    }

    /// Target element size at triangle `t` for nominal size `h`.
    pub fn target_size(&self, t: usize, h: f64, grading: &[CornerGrading]) -> f64 {
        let mut target = h;
        for g in grading {
            if g.beta <= 0.0 {
                continue;
            }
            let d = self.triangles[t]
                .iter()
                .map(|&v| norm(sub(self.vertices[v], g.point)))
                .fold(f64::INFINITY, f64::min);
            let floor = h.powf(1.0 / (1.0 - g.beta));
            target = target.min(h * (d / self.diameter).max(floor).powf(g.beta));
        }
        target
    }

    /// Refines until every triangle satisfies `size <= target_size`.
    pub fn refine_to(&mut self, h: f64, grading: &[CornerGrading]) {
        loop {
            let marked: Vec<usize> = (0..self.num_triangles())
                .filter(|&t| self.size(t) > self.target_size(t, h, grading) * (1.0 + 1e-10))
                .collect();
            if marked.is_empty() {
                return;
            }
            self.refine(&marked);
        }
    }

    /// No hanging nodes: every edge is shared by two triangles unless it
    /// lies on the polygon boundary; every triangle positively oriented.
    pub fn check_conforming(&self) -> Result<()> {
        let mut count: HashMap<(usize, usize), u32> = HashMap::new();
        for (t, tri) in self.triangles.iter().enumerate() {
            if !(self.area(t) > 0.0) {
                return Err(Error::Geometry(format!("triangle {t} is not positively oriented")));
            }
            for k in 0..3 {
                *count.entry(edge_key(tri[k], tri[(k + 1) % 3])).or_default() += 1;
            }
        }
        let scale = self.diameter;
        for ((a, b), c) in count {
            if c > 2 {
                return Err(Error::Geometry(format!("edge ({a}, {b}) shared by {c} triangles")));
            }
            if c == 1 {
                let (pa, pb) = (self.vertices[a], self.vertices[b]);
                let mid = [0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])];
                let on = self.polygon.iter().enumerate().any(|(i, &p)| {
                    let q = self.polygon[(i + 1) % self.polygon.len()];
                    crate::problem::point_segment_distance(mid, p, q) <= 1e-12 * scale
                });
                if !on {
                    return Err(Error::Geometry(format!("interior edge ({a}, {b}) has a single neighbor")));
                }
            }
        }
        Ok(())
    }

    /// True when every triangle of `self` is a union of triangles of `finer`.
    pub fn is_refined_by(&self, finer: &TriMesh) -> bool {
        if finer.vertices.len() < self.vertices.len() || finer.vertices[..self.vertices.len()] != self.vertices[..] {
            return false;
        }
        let mut covered = vec![0.0; self.num_triangles()];
        for t in 0..finer.num_triangles() {
            let [a, b, c] = finer.triangles[t];
            let (pa, pb, pc) = (finer.vertices[a], finer.vertices[b], finer.vertices[c]);
            let cen = [(pa[0] + pb[0] + pc[0]) / 3.0, (pa[1] + pb[1] + pc[1]) / 3.0];
            let Some(parent) = (0..self.num_triangles()).find(|&p| self.contains_point(p, cen)) else {
                return false;
            };
            // all child vertices must lie in the closed parent
            if ![pa, pb, pc].iter().all(|&q| self.contains_point(parent, q)) {
                return false;
            }
            covered[parent] += finer.area(t);
        }
        covered.iter().enumerate().all(|(p, &a)| (a - self.area(p)).abs() <= 1e-12 * self.area(p))
    }

    fn contains_point(&self, t: usize, p: Point) -> bool {
        let [a, b, c] = self.triangles[t];
        let (pa, pb, pc) = (self.vertices[a], self.vertices[b], self.vertices[c]);
        let tol = -1e-12 * self.area(t);
        orient(pa, pb, p) >= tol && orient(pb, pc, p) >= tol && orient(pc, pa, p) >= tol
    }

    /// Plain-text OFF export (vertices with z = 0, then triangles).
    pub fn write_off(&self, mut w: impl Write) -> std::io::Result<()> {
        writeln!(w, "OFF")?;
        writeln!(w, "{} {} 0", self.num_vertices(), self.num_triangles())?;
        for v in &self.vertices {
            writeln!(w, "{:.17e} {:.17e} 0", v[0], v[1])?;
        }
        for t in &self.triangles {
            writeln!(w, "3 {} {} {}", t[0], t[1], t[2])?;
        }
        Ok(())
    }
}

/// Coarse mesh refined to nominal size `h` with the given corner grading.
pub fn graded_triangulation(domain: &DomainSpec, h: f64, grading: &[CornerGrading]) -> Result<TriMesh> {
    if !(h > 0.0) {
        return Err(Error::Parameter(format!("mesh size {h} must be positive")));
    }
    if let Some(g) = grading.iter().find(|g| !(g.beta >= 0.0 && g.beta < 1.0)) {
        return Err(Error::Parameter(format!("grading exponent {} outside [0, 1)", g.beta)));
    }
    if matches!(domain.kind, DomainKind::Interval { .. }) {
        return Err(Error::UnsupportedDomain("interval domains use interval spaces".into()));
    }
    let mut mesh = TriMesh::coarse(domain)?;
    mesh.refine_to(h, grading);
    Ok(mesh)
}

/// Nested sequence of meshes, each obtained by further refining the
/// previous one; `sizes` must be decreasing.
pub fn graded_hierarchy(domain: &DomainSpec, sizes: &[f64], grading: &[CornerGrading]) -> Result<Vec<TriMesh>> {
    let mut out: Vec<TriMesh> = Vec::with_capacity(sizes.len());
    for &h in sizes {
        let mesh = match out.last() {
            None => graded_triangulation(domain, h, grading)?,
            Some(prev) => {
                let mut m = prev.clone();
                m.refine_to(h, grading);
                m
            }
        };
        out.push(mesh);
    }
    Ok(out)
}

fn ear_clip(poly: &[Point]) -> Result<Vec<[usize; 3]>> {
    let mut idx: Vec<usize> = (0..poly.len()).collect();
    let mut tris = Vec::with_capacity(poly.len() - 2);
    while idx.len() > 3 {
        let n = idx.len();
        let mut found = None;
        for i in 0..n {
            let (p, c, q) = (idx[(i + n - 1) % n], idx[i], idx[(i + 1) % n]);
            if orient(poly[p], poly[c], poly[q]) <= 0.0 {
                continue;
            }
            let blocked = idx.iter().any(|&o| {
                o != p && o != c && o != q && {
                    let x = poly[o];
                    orient(poly[p], poly[c], x) >= 0.0 && orient(poly[c], poly[q], x) >= 0.0 && orient(poly[q], poly[p], x) >= 0.0
                }
            });
            if !blocked {
                found = Some(i);
                break;
            }
        }
        let i = found.ok_or_else(|| Error::Geometry("no ear found; polygon is not simple".into()))?;
        tris.push([idx[(i + n - 1) % n], idx[i], idx[(i + 1) % n]]);
        idx.remove(i);
    }
    tris.push([idx[0], idx[1], idx[2]]);
    Ok(tris)
}

fn in_circle(a: Point, b: Point, c: Point, d: Point) -> f64 {
    let (ax, ay) = (a[0] - d[0], a[1] - d[1]);
    let (bx, by) = (b[0] - d[0], b[1] - d[1]);
    let (cx, cy) = (c[0] - d[0], c[1] - d[1]);
    (ax * ax + ay * ay) * (bx * cy - cx * by) - (bx * bx + by * by) * (ax * cy - cx * ay)
        + (cx * cx + cy * cy) * (ax * by - bx * ay)
}

fn lawson_flips(poly: &[Point], tris: &mut [[usize; 3]]) {
    let scale = poly.iter().map(|p| norm(*p)).fold(1.0, f64::max).powi(4);
    for _ in 0..10_000 {
        let mut flipped = false;
        'outer: for i in 0..tris.len() {
            for j in (i + 1)..tris.len() {
                // shared edge?
                let ti = tris[i];
                let tj = tris[j];
                for k in 0..3 {
                    let (a, b) = (ti[k], ti[(k + 1) % 3]);
                    let c = ti[(k + 2) % 3];
                    if let Some(l) = (0..3).find(|&l| tj[l] == b && tj[(l + 1) % 3] == a) {
                        let d = tj[(l + 2) % 3];
                        if in_circle(poly[a], poly[b], poly[c], poly[d]) > 1e-12 * scale {
                            tris[i] = [c, a, d];
                            tris[j] = [d, b, c];
                            flipped = true;
                            break 'outer;
                        }
                    }
                }
            }
        }
        if !flipped {
            return;
        }
    }
}

fn longest_edge_first(poly: &[Point], t: [usize; 3]) -> [usize; 3] {
    let len = |a: usize, b: usize| norm(sub(poly[a], poly[b]));
    let mut best = 0;
    let mut best_len = -1.0;
    for k in 0..3 {
        let l = len(t[(k + 1) % 3], t[(k + 2) % 3]);
        if l > best_len * (1.0 + 1e-12) {
            best = k;
            best_len = l;
        }
    }
    [t[best], t[(best + 1) % 3], t[(best + 2) % 3]]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn l_shape_coarse_mesh() {
        let m = TriMesh::coarse(&DomainSpec::l_shape()).unwrap();
        assert_eq!(m.num_triangles(), 4);
        m.check_conforming().unwrap();
        let area: f64 = (0..4).map(|t| m.area(t)).sum();
        assert!((area - 3.0).abs() < 1e-14);
        assert!((m.min_angle() - std::f64::consts::FRAC_PI_4).abs() < 1e-12);
    }

    #[test]
    fn uniform_square_is_quasi_uniform() {
        let m = graded_triangulation(&DomainSpec::unit_square(), 1.0 / 16.0, &[]).unwrap();
        m.check_conforming().unwrap();
        assert!(m.h_max() / m.h_min() <= 4.0);
        assert!((m.h_max() - 1.0 / 16.0).abs() < 1e-14);
        assert_eq!(m.num_triangles(), 2 * 16 * 16);
        assert!((m.min_angle() - std::f64::consts::FRAC_PI_4).abs() < 1e-12);
    }

    #[test]
    fn hierarchy_is_nested_and_conforming() {
        let d = DomainSpec::l_shape();
        let g = default_grading(&d);
        let ms = graded_hierarchy(&d, &[0.5, 0.25, 0.125], &g).unwrap();
        for w in ms.windows(2) {
            w[1].check_conforming().unwrap();
            assert!(w[0].is_refined_by(&w[1]));
        }
    }

    #[test]
    fn default_grading_of_l_shape() {
        let g = default_grading(&DomainSpec::l_shape());
        let reentrant = g.iter().find(|c| c.point == [0.0, 0.0]).unwrap();
        assert!((reentrant.beta - (1.0 - 2.0 / 3.0 + 0.05)).abs() < 1e-12);
        assert_eq!(g.iter().filter(|c| c.beta > 0.0).count(), 1);
    }

    #[test]
    fn corner_element_size_follows_grading_law() {
        let d = DomainSpec::l_shape();
        let beta = 0.4;
        let g = [CornerGrading { point: [0.0, 0.0], beta }];
        for h in [1.0 / 8.0, 1.0 / 16.0, 1.0 / 32.0] {
            let m = graded_triangulation(&d, h, &g).unwrap();
            let corner = m.vertices.iter().position(|v| *v == [0.0, 0.0]).unwrap();
            let smallest = (0..m.num_triangles())
                .filter(|&t| m.triangles[t].contains(&corner))
                .map(|t| m.size(t))
                .fold(f64::INFINITY, f64::min);
            let ratio = smallest / h;
            let law = h.powf(beta / (1.0 - beta));
            assert!(ratio <= 4.0 * law && ratio >= law / 4.0, "h={h}: {ratio} vs {law}");
        }
    }

    #[test]
    fn off_export() {
        let m = TriMesh::coarse(&DomainSpec::unit_square()).unwrap();
        let mut out = Vec::new();
        m.write_off(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert!(text.starts_with("OFF\n4 2 0\n"));
    }
}
