//! Problem instances: fractional order, coefficients, domains, forcing,
//! and the exponential weights used in the regularity checks.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::gamma;

pub type Point = [f64; 2];

/// Order `s` of the fractional operator together with the derived weight
/// exponent `alpha = 1 - 2s` and the Neumann-trace constant
/// `d_s = 2^(1-2s) Gamma(1-s) / Gamma(s)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FractionalOrder {
    s: f64,
    alpha: f64,
    d_s: f64,
}

impl FractionalOrder {
    pub fn new(s: f64) -> Result<Self> {
        if !(s > 0.0 && s < 1.0) {
            return Err(Error::Domain(format!("fractional order s = {s} must lie in (0, 1)")));
        }
        let d_s = if s == 0.5 {
            1.0
        } else {
            2f64.powf(1.0 - 2.0 * s) * gamma(1.0 - s) / gamma(s)
        };
        Ok(Self { s, alpha: 1.0 - 2.0 * s, d_s })
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn d_s(&self) -> f64 {
        self.d_s
    }
}

pub fn make_order(s: f64) -> Result<FractionalOrder> {
    FractionalOrder::new(s)
}

/// Weight `y^beta * exp(gamma * y)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpWeight {
    pub beta: f64,
    pub gamma: f64,
}

impl ExpWeight {
    pub fn new(beta: f64, gamma: f64) -> Result<Self> {
        if gamma < 0.0 {
            return Err(Error::Parameter(format!("weight rate gamma = {gamma} must be nonnegative")));
        }
        Ok(Self { beta, gamma })
    }

    /// Admissible for the regularity estimates when `gamma < 2 sqrt(lambda_1)`.
    pub fn admissible(&self, lambda1: f64) -> bool {
        self.gamma < 2.0 * lambda1.sqrt()
    }

    pub fn eval(&self, y: f64) -> Result<f64> {
        weight_eval(self, y)
    }
}

pub fn weight_eval(w: &ExpWeight, y: f64) -> Result<f64> {
    if y < 0.0 || y.is_nan() {
        return Err(Error::Domain(format!("weight evaluated at y = {y}")));
    }
    if y == 0.0 {
        if w.beta < 0.0 {
            return Err(Error::SingularEvaluation(format!("y^{} at y = 0", w.beta)));
        }
        return Ok(if w.beta == 0.0 { 1.0 } else { 0.0 });
    }
    Ok(y.powf(w.beta) * (w.gamma * y).exp())
}

type MatrixField = Arc<dyn Fn(Point) -> [[f64; 2]; 2] + Send + Sync>;
type ScalarField = Arc<dyn Fn(Point) -> f64 + Send + Sync>;

/// Diffusion tensor `A(x)`; symmetric positive definite.
#[derive(Clone)]
pub enum Diffusion {
    Constant([[f64; 2]; 2]),
    Field(MatrixField),
}

/// Reaction coefficient `c(x) >= 0`.
#[derive(Clone)]
pub enum Reaction {
    Constant(f64),
    Field(ScalarField),
}

#[derive(Clone)]
pub struct Coefficients {
    pub diffusion: Diffusion,
    pub reaction: Reaction,
}

impl fmt::Debug for Coefficients {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let d = match &self.diffusion {
            Diffusion::Constant(a) => format!("{a:?}"),
            Diffusion::Field(_) => "<field>".into(),
        };
        let c = match &self.reaction {
            Reaction::Constant(c) => format!("{c}"),
            Reaction::Field(_) => "<field>".into(),
        };
        write!(f, "Coefficients {{ diffusion: {d}, reaction: {c} }}")
    }
}

impl Default for Coefficients {
    fn default() -> Self {
        Self::laplacian()
    }
}

impl Coefficients {
    /// `A = I`, `c = 0`.
    pub fn laplacian() -> Self {
        Self::isotropic(1.0, 0.0)
    }

    /// `A = a I`, constant `c`.
    pub fn isotropic(a: f64, c: f64) -> Self {
        Self {
            diffusion: Diffusion::Constant([[a, 0.0], [0.0, a]]),
            reaction: Reaction::Constant(c),
        }
    }

    pub fn diffusion_at(&self, x: Point) -> [[f64; 2]; 2] {
        match &self.diffusion {
            Diffusion::Constant(a) => *a,
            Diffusion::Field(f) => f(x),
        }
    }

    pub fn reaction_at(&self, x: Point) -> f64 {
        match &self.reaction {
            Reaction::Constant(c) => *c,
            Reaction::Field(f) => f(x),
        }
    }

    /// `Some((a, c))` when `A = a I` and `c` are constant.
    pub fn as_isotropic_constant(&self) -> Option<(f64, f64)> {
        match (&self.diffusion, &self.reaction) {
            (Diffusion::Constant(a), Reaction::Constant(c))
                if a[0][1] == 0.0 && a[1][0] == 0.0 && a[0][0] == a[1][1] =>
            {
                Some((a[0][0], *c))
            }
            _ => None,
        }
    }

    /// Checks symmetry, positive definiteness and `c >= 0` at a point.
    pub fn check_at(&self, x: Point) -> Result<()> {
        let a = self.diffusion_at(x);
        if (a[0][1] - a[1][0]).abs() > 1e-14 * (a[0][0].abs() + a[1][1].abs()) {
            return Err(Error::Parameter(format!("diffusion tensor not symmetric at {x:?}")));
        }
        let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
        if !(a[0][0] > 0.0 && det > 0.0) {
            return Err(Error::Parameter(format!("diffusion tensor not positive definite at {x:?}")));
        }
        let c = self.reaction_at(x);
        if !(c >= 0.0) {
            return Err(Error::Parameter(format!("reaction coefficient {c} negative at {x:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DomainKind {
    Interval { a: f64, b: f64 },
    Rectangle { ax: f64, bx: f64, ay: f64, by: f64 },
    /// Counterclockwise vertex list.
    Polygon { vertices: Vec<Point> },
}

/// A polygon corner and its interior opening angle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Corner {
    pub point: Point,
    pub angle: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DomainSpec {
    pub kind: DomainKind,
    pub corners: Vec<Corner>,
}

impl DomainSpec {
    pub fn interval(a: f64, b: f64) -> Result<Self> {
        if !(b > a) {
            return Err(Error::Geometry(format!("empty interval ({a}, {b})")));
        }
        Ok(Self { kind: DomainKind::Interval { a, b }, corners: Vec::new() })
    }

    pub fn rectangle(ax: f64, bx: f64, ay: f64, by: f64) -> Result<Self> {
        if !(bx > ax && by > ay) {
            return Err(Error::Geometry("degenerate rectangle".into()));
        }
        let kind = DomainKind::Rectangle { ax, bx, ay, by };
        let corners = corners_of(&rectangle_vertices(ax, bx, ay, by));
        Ok(Self { kind, corners })
    }

    pub fn unit_square() -> Self {
        Self::rectangle(0.0, 1.0, 0.0, 1.0).expect("unit square")
    }

    /// Simple polygon; the vertex list is reoriented counterclockwise if needed.
    pub fn polygon(mut vertices: Vec<Point>) -> Result<Self> {
        if vertices.len() < 3 {
            return Err(Error::Geometry("polygon needs at least three vertices".into()));
        }
        if signed_area(&vertices) < 0.0 {
            vertices.reverse();
        }
        check_simple(&vertices)?;
        let corners = corners_of(&vertices);
        Ok(Self { kind: DomainKind::Polygon { vertices }, corners })
    }

    /// The L-shaped domain `(-1,1)^2 \ [0,1) x (-1,0]` with re-entrant corner at the origin.
    pub fn l_shape() -> Self {
        Self::polygon(vec![
            [0.0, 0.0],
            [1.0, 0.0],
            [1.0, 1.0],
            [-1.0, 1.0],
            [-1.0, -1.0],
            [0.0, -1.0],
        ])
        .expect("L-shape")
    }

    pub fn dim(&self) -> usize {
        match self.kind {
            DomainKind::Interval { .. } => 1,
            _ => 2,
        }
    }

    /// Boundary vertices of a two-dimensional domain, counterclockwise.
    pub fn vertices(&self) -> Vec<Point> {
        match &self.kind {
            DomainKind::Interval { a, b } => vec![[*a, 0.0], [*b, 0.0]],
            DomainKind::Rectangle { ax, bx, ay, by } => rectangle_vertices(*ax, *bx, *ay, *by),
            DomainKind::Polygon { vertices } => vertices.clone(),
        }
    }

    pub fn diameter(&self) -> f64 {
        let v = self.vertices();
        let mut d: f64 = 0.0;
        for p in &v {
            for q in &v {
                d = d.max(dist(*p, *q));
            }
        }
        d
    }

    pub fn measure(&self) -> f64 {
        match &self.kind {
            DomainKind::Interval { a, b } => b - a,
            _ => signed_area(&self.vertices()),
        }
    }

    /// Recomputes corner angles from the vertex list and compares them
    /// with the stored ones.
    pub fn validate(&self) -> Result<()> {
        if self.dim() == 1 {
            return Ok(());
        }
        let v = self.vertices();
        check_simple(&v)?;
        let fresh = corners_of(&v);
        if fresh.len() != self.corners.len() {
            return Err(Error::Geometry("corner list does not match the vertex list".into()));
        }
        for (a, b) in fresh.iter().zip(&self.corners) {
            if dist(a.point, b.point) > 1e-12 || (a.angle - b.angle).abs() > 1e-12 {
                return Err(Error::Geometry(format!(
                    "stored corner angle {} at {:?} differs from {}",
                    b.angle, b.point, a.angle
                )));
            }
        }
        Ok(())
    }

    /// Closed-domain membership test (boundary included, tolerance `tol`).
    pub fn contains(&self, x: Point, tol: f64) -> bool {
        match &self.kind {
            DomainKind::Interval { a, b } => x[0] >= a - tol && x[0] <= b + tol,
            _ => {
                let v = self.vertices();
                if on_boundary(&v, x, tol) {
                    return true;
                }
                winding_inside(&v, x)
            }
        }
    }

    /// True if `x` lies on the boundary within `tol`.
    pub fn on_boundary(&self, x: Point, tol: f64) -> bool {
        match &self.kind {
            DomainKind::Interval { a, b } => (x[0] - a).abs() <= tol || (x[0] - b).abs() <= tol,
            _ => on_boundary(&self.vertices(), x, tol),
        }
    }
}

fn rectangle_vertices(ax: f64, bx: f64, ay: f64, by: f64) -> Vec<Point> {
    vec![[ax, ay], [bx, ay], [bx, by], [ax, by]]
}

pub(crate) fn dist(p: Point, q: Point) -> f64 {
    ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt()
}

pub(crate) fn signed_area(v: &[Point]) -> f64 {
    let n = v.len();
    let mut a = 0.0;
    for i in 0..n {
        let p = v[i];
        let q = v[(i + 1) % n];
        a += p[0] * q[1] - q[0] * p[1];
    }
    0.5 * a
}

fn corners_of(v: &[Point]) -> Vec<Corner> {
    let n = v.len();
    (0..n)
        .map(|i| {
            let prev = v[(i + n - 1) % n];
            let cur = v[i];
            let next = v[(i + 1) % n];
            let d_in = [cur[0] - prev[0], cur[1] - prev[1]];
            let d_out = [next[0] - cur[0], next[1] - cur[1]];
            let cross = d_in[0] * d_out[1] - d_in[1] * d_out[0];
            let dot = d_in[0] * d_out[0] + d_in[1] * d_out[1];
            // exterior turning angle; interior = pi - turn for a ccw polygon
            let turn = cross.atan2(dot);
            Corner { point: cur, angle: PI - turn }
        })
        .collect()
}

fn segments_intersect(p1: Point, p2: Point, q1: Point, q2: Point) -> bool {
    fn orient(a: Point, b: Point, c: Point) -> f64 {
        (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
    }
    let d1 = orient(q1, q2, p1);
    let d2 = orient(q1, q2, p2);
    let d3 = orient(p1, p2, q1);
    let d4 = orient(p1, p2, q2);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    let on_seg = |a: Point, b: Point, c: Point| {
        c[0] >= a[0].min(b[0]) && c[0] <= a[0].max(b[0]) && c[1] >= a[1].min(b[1]) && c[1] <= a[1].max(b[1])
    };
    (d1 == 0.0 && on_seg(q1, q2, p1))
        || (d2 == 0.0 && on_seg(q1, q2, p2))
        || (d3 == 0.0 && on_seg(p1, p2, q1))
        || (d4 == 0.0 && on_seg(p1, p2, q2))
}

fn check_simple(v: &[Point]) -> Result<()> {
    let n = v.len();
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            if dist(v[i], v[j]) == 0.0 {
                return Err(Error::Geometry(format!("repeated vertex {:?}", v[i])));
            }
        }
    }
    for i in 0..n {
        let (a1, a2) = (v[i], v[(i + 1) % n]);
        for j in (i + 1)..n {
            // adjacent edges share a vertex
            if j == i + 1 || (i == 0 && j == n - 1) {
                continue;
            }
            let (b1, b2) = (v[j], v[(j + 1) % n]);
            if segments_intersect(a1, a2, b1, b2) {
                return Err(Error::Geometry(format!("polygon edges {i} and {j} intersect")));
            }
        }
    }
    if signed_area(v).abs() == 0.0 {
        return Err(Error::Geometry("polygon has zero area".into()));
    }
    Ok(())
}

fn on_boundary(v: &[Point], x: Point, tol: f64) -> bool {
    let n = v.len();
    (0..n).any(|i| point_segment_distance(x, v[i], v[(i + 1) % n]) <= tol)
}

pub(crate) fn point_segment_distance(x: Point, a: Point, b: Point) -> f64 {
    let ab = [b[0] - a[0], b[1] - a[1]];
    let ax = [x[0] - a[0], x[1] - a[1]];
    let len2 = ab[0] * ab[0] + ab[1] * ab[1];
    let t = ((ax[0] * ab[0] + ax[1] * ab[1]) / len2).clamp(0.0, 1.0);
    dist(x, [a[0] + t * ab[0], a[1] + t * ab[1]])
}

fn winding_inside(v: &[Point], x: Point) -> bool {
    let n = v.len();
    let mut inside = false;
    let mut j = n - 1;
    for i in 0..n {
        let (pi, pj) = (v[i], v[j]);
        if (pi[1] > x[1]) != (pj[1] > x[1]) {
            let xint = pj[0] + (x[1] - pj[1]) * (pi[0] - pj[0]) / (pi[1] - pj[1]);
            if x[0] < xint {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

/// Right-hand side `f`.
#[derive(Clone)]
pub enum Forcing {
    /// Coefficients `f_k` in the sine eigenbasis of an interval or rectangle
    /// (modes ordered by increasing eigenvalue, see `spectral_oracle`).
    SpectralCoefficients(Vec<f64>),
    Closure(ScalarField),
    Constant(f64),
    /// `amplitude * sin(m pi x) sin(n pi y)` (in 1D: `amplitude * sin(m pi x)`).
    SineProduct { amplitude: f64, frequencies: [u32; 2] },
}

impl fmt::Debug for Forcing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Forcing::SpectralCoefficients(c) => write!(f, "SpectralCoefficients({} modes)", c.len()),
            Forcing::Closure(_) => write!(f, "Closure"),
            Forcing::Constant(v) => write!(f, "Constant({v})"),
            Forcing::SineProduct { amplitude, frequencies } => {
                write!(f, "SineProduct {{ amplitude: {amplitude}, frequencies: {frequencies:?} }}")
            }
        }
    }
}

impl Forcing {
    pub fn closure(f: impl Fn(Point) -> f64 + Send + Sync + 'static) -> Self {
        Forcing::Closure(Arc::new(f))
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Forcing::SpectralCoefficients(c) => c.iter().all(|&v| v == 0.0),
            Forcing::Constant(v) => *v == 0.0,
            Forcing::SineProduct { amplitude, .. } => *amplitude == 0.0,
            Forcing::Closure(_) => false,
        }
    }

    /// Pointwise value; spectral coefficients are summed in the sine basis of `domain`.
    pub fn eval(&self, domain: &DomainSpec, x: Point) -> Result<f64> {
        Ok(match self {
            Forcing::Constant(v) => *v,
            Forcing::Closure(f) => f(x),
            Forcing::SineProduct { amplitude, frequencies } => {
                let sx = (frequencies[0] as f64 * PI * x[0]).sin();
                if domain.dim() == 1 {
                    amplitude * sx
                } else {
                    amplitude * sx * (frequencies[1] as f64 * PI * x[1]).sin()
                }
            }
            Forcing::SpectralCoefficients(c) => {
                let modes = crate::spectral_oracle::sine_modes(domain, c.len())?;
                let mut acc = 0.0;
                for (fk, m) in c.iter().zip(&modes) {
                    if *fk != 0.0 {
                        acc += fk * m.eval(x);
                    }
                }
                acc
            }
        })
    }
}

/// A complete instance of the fractional diffusion problem.
#[derive(Clone, Debug)]
pub struct FractionalProblem {
    pub order: FractionalOrder,
    pub domain: DomainSpec,
    pub coefficients: Coefficients,
    pub forcing: Forcing,
}

impl FractionalProblem {
    pub fn new(s: f64, domain: DomainSpec, coefficients: Coefficients, forcing: Forcing) -> Result<Self> {
        Ok(Self { order: FractionalOrder::new(s)?, domain, coefficients, forcing })
    }

    pub fn with_order(&self, s: f64) -> Result<Self> {
        let mut p = self.clone();
        p.order = FractionalOrder::new(s)?;
        Ok(p)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: ProblemDoc = serde_json::from_str(text).map_err(|e| Error::Serialization(e.to_string()))?;
        doc.into_problem()
    }

    pub fn to_json(&self) -> Result<String> {
        let doc = ProblemDoc::from_problem(self)?;
        serde_json::to_string_pretty(&doc).map_err(|e| Error::Serialization(e.to_string()))
    }
}

/// JSON form of a problem:
///
/// ```json
/// { "s": 0.5,
///   "domain": {"interval": [0, 1]} | {"rectangle": [ax, bx, ay, by]} | {"polygon": [[x, y], ...]} | "l_shape",
///   "coefficients": {"diffusion": 1.0 | [[a11, a12], [a21, a22]], "reaction": 0.0},
///   "forcing": {"constant": 1.0} | {"spectral": [f1, f2, ...]}
///            | {"sine_product": {"amplitude": 1.0, "frequencies": [1, 1]}} }
/// ```
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProblemDoc {
    pub s: f64,
    pub domain: DomainDoc,
    #[serde(default)]
    pub coefficients: CoefficientsDoc,
    pub forcing: ForcingDoc,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DomainDoc {
    Interval([f64; 2]),
    Rectangle([f64; 4]),
    Polygon(Vec<[f64; 2]>),
    LShape,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DiffusionDoc {
    Scalar(f64),
    Matrix([[f64; 2]; 2]),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoefficientsDoc {
    pub diffusion: DiffusionDoc,
    #[serde(default)]
    pub reaction: f64,
}

impl Default for CoefficientsDoc {
    fn default() -> Self {
        Self { diffusion: DiffusionDoc::Scalar(1.0), reaction: 0.0 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ForcingDoc {
    Constant(f64),
    Spectral(Vec<f64>),
    SineProduct { amplitude: f64, frequencies: [u32; 2] },
}

impl ProblemDoc {
    pub fn into_problem(self) -> Result<FractionalProblem> {
        let domain = match self.domain {
            DomainDoc::Interval([a, b]) => DomainSpec::interval(a, b)?,
            DomainDoc::Rectangle([ax, bx, ay, by]) => DomainSpec::rectangle(ax, bx, ay, by)?,
            DomainDoc::Polygon(v) => DomainSpec::polygon(v)?,
            DomainDoc::LShape => DomainSpec::l_shape(),
        };
        let a = match self.coefficients.diffusion {
            DiffusionDoc::Scalar(a) => [[a, 0.0], [0.0, a]],
            DiffusionDoc::Matrix(m) => m,
        };
        let coefficients =
            Coefficients { diffusion: Diffusion::Constant(a), reaction: Reaction::Constant(self.coefficients.reaction) };
        coefficients.check_at([0.0, 0.0])?;
        let forcing = match self.forcing {
            ForcingDoc::Constant(v) => Forcing::Constant(v),
            ForcingDoc::Spectral(c) => Forcing::SpectralCoefficients(c),
            ForcingDoc::SineProduct { amplitude, frequencies } => Forcing::SineProduct { amplitude, frequencies },
        };
        FractionalProblem::new(self.s, domain, coefficients, forcing)
    }

    pub fn from_problem(p: &FractionalProblem) -> Result<Self> {
        let domain = match &p.domain.kind {
            DomainKind::Interval { a, b } => DomainDoc::Interval([*a, *b]),
            DomainKind::Rectangle { ax, bx, ay, by } => DomainDoc::Rectangle([*ax, *bx, *ay, *by]),
            DomainKind::Polygon { vertices } => DomainDoc::Polygon(vertices.clone()),
        };
        let diffusion = match &p.coefficients.diffusion {
            Diffusion::Constant(a) if a[0][1] == 0.0 && a[1][0] == 0.0 && a[0][0] == a[1][1] => {
                DiffusionDoc::Scalar(a[0][0])
            }
            Diffusion::Constant(a) => DiffusionDoc::Matrix(*a),
            Diffusion::Field(_) => return Err(Error::Serialization("diffusion field is not serializable".into())),
        };
        let reaction = match &p.coefficients.reaction {
            Reaction::Constant(c) => *c,
            Reaction::Field(_) => return Err(Error::Serialization("reaction field is not serializable".into())),
        };
        let forcing = match &p.forcing {
            Forcing::Constant(v) => ForcingDoc::Constant(*v),
            Forcing::SpectralCoefficients(c) => ForcingDoc::Spectral(c.clone()),
            Forcing::SineProduct { amplitude, frequencies } => {
                ForcingDoc::SineProduct { amplitude: *amplitude, frequencies: *frequencies }
            }
            Forcing::Closure(_) => return Err(Error::Serialization("closure forcing is not serializable".into())),
        };
        Ok(Self { s: p.order.s(), domain, coefficients: CoefficientsDoc { diffusion, reaction }, forcing })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_half_is_trivial() {
        let o = make_order(0.5).unwrap();
        assert_eq!(o.alpha(), 0.0);
        assert_eq!(o.d_s(), 1.0);
    }

    #[test]
    fn order_constants_match_high_precision_values() {
        // sqrt(2) Gamma(3/4) / Gamma(1/4) and 2^(-1/2) Gamma(1/4) / Gamma(3/4), 20 digits
        let o = make_order(0.25).unwrap();
        assert_eq!(o.alpha(), 0.5);
        assert!((o.d_s() / 0.477_988_797_486_124_995_36 - 1.0).abs() < 1e-13);
        let o = make_order(0.75).unwrap();
        assert_eq!(o.alpha(), -0.5);
        assert!((o.d_s() / 2.092_099_240_106_203_297_9 - 1.0).abs() < 1e-13);
    }

    #[test]
    fn order_rejects_out_of_range() {
        for s in [0.0, 1.0, -0.1, 1.5, f64::NAN] {
            assert!(matches!(make_order(s), Err(Error::Domain(_))));
        }
    }

    #[test]
    fn d_s_reflection_and_alpha_antisymmetry() {
        for i in 1..100 {
            let s = i as f64 / 100.0;
            let a = make_order(s).unwrap();
            let b = make_order(1.0 - s).unwrap();
            assert!((a.d_s() * b.d_s() - 1.0).abs() < 1e-12, "s={s}");
            assert!((a.alpha() + b.alpha()).abs() < 1e-15);
        }
    }

    #[test]
    fn weight_examples() {
        let w = ExpWeight::new(0.0, 0.0).unwrap();
        assert_eq!(weight_eval(&w, 3.7).unwrap(), 1.0);
        let w = ExpWeight::new(1.0, 0.0).unwrap();
        assert_eq!(weight_eval(&w, 2.0).unwrap(), 2.0);
        let w = ExpWeight::new(-0.5, 1.0).unwrap();
        assert!((weight_eval(&w, 1.0).unwrap() - std::f64::consts::E).abs() < 1e-15);
        assert!(matches!(weight_eval(&w, 0.0), Err(Error::SingularEvaluation(_))));
        assert!(weight_eval(&ExpWeight::new(0.5, 1.0).unwrap(), 0.0).is_ok());
    }

    #[test]
    fn polygon_angles_sum() {
        for d in [DomainSpec::l_shape(), DomainSpec::unit_square()] {
            let n = d.corners.len() as f64;
            let sum: f64 = d.corners.iter().map(|c| c.angle).sum();
            assert!((sum - (n - 2.0) * PI).abs() < 1e-10);
            d.validate().unwrap();
        }
        let l = DomainSpec::l_shape();
        let origin = l.corners.iter().find(|c| c.point == [0.0, 0.0]).unwrap();
        assert!((origin.angle - 1.5 * PI).abs() < 1e-14);
    }

    #[test]
    fn polygon_orientation_and_self_intersection() {
        let cw = DomainSpec::polygon(vec![[0.0, 0.0], [0.0, 1.0], [1.0, 1.0], [1.0, 0.0]]).unwrap();
        assert!(cw.measure() > 0.0);
        let bowtie = DomainSpec::polygon(vec![[0.0, 0.0], [1.0, 1.0], [1.0, 0.0], [0.0, 1.0]]);
        assert!(matches!(bowtie, Err(Error::Geometry(_))));
    }

    #[test]
    fn tampered_corner_angle_is_detected() {
        let mut d = DomainSpec::l_shape();
        d.corners[0].angle += 1e-9;
        assert!(d.validate().is_err());
    }

    #[test]
    fn json_round_trip() {
        let text = r#"{"s": 0.3, "domain": "l_shape",
            "coefficients": {"diffusion": 1.0, "reaction": 0.0},
            "forcing": {"sine_product": {"amplitude": 2.5, "frequencies": [1, 1]}}}"#;
        let p = FractionalProblem::from_json(text).unwrap();
        assert_eq!(p.order.s(), 0.3);
        assert_eq!(p.domain, DomainSpec::l_shape());
        let again = FractionalProblem::from_json(&p.to_json().unwrap()).unwrap();
        assert_eq!(again.domain, p.domain);
        assert_eq!(again.order, p.order);

        let text = r#"{"s": 0.5, "domain": {"interval": [0, 1]}, "forcing": {"spectral": [1.0]}}"#;
        let p = FractionalProblem::from_json(text).unwrap();
        assert_eq!(p.coefficients.as_isotropic_constant(), Some((1.0, 0.0)));
        assert!(FractionalProblem::from_json(r#"{"s": 1.5, "domain": "l_shape", "forcing": {"constant": 1}}"#).is_err());
    }

    #[test]
    fn closures_do_not_serialize() {
        let p = FractionalProblem::new(
            0.5,
            DomainSpec::unit_square(),
            Coefficients::laplacian(),
            Forcing::closure(|x| x[0]),
        )
        .unwrap();
        assert!(matches!(p.to_json(), Err(Error::Serialization(_))));
    }

    #[test]
    fn coefficient_checks() {
        let c = Coefficients::isotropic(1.0, -1.0);
        assert!(c.check_at([0.0, 0.0]).is_err());
        let c = Coefficients {
            diffusion: Diffusion::Constant([[1.0, 2.0], [2.0, 1.0]]),
            reaction: Reaction::Constant(0.0),
        };
        assert!(c.check_at([0.0, 0.0]).is_err());
        assert!(Coefficients::laplacian().check_at([0.3, 0.2]).is_ok());
    }
}
