//! Exact eigen-expansions for constant-coefficient operators
//! `-a Laplace + c` on intervals and axis-aligned rectangles with
//! homogeneous Dirichlet conditions.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashSet};
use std::f64::consts::PI;

use crate::bessel::PsiProfile;
use crate::error::{Error, Result};
use crate::problem::{DomainKind, DomainSpec, FractionalOrder, FractionalProblem, Forcing, Point};
use crate::quadrature::{gauss_laguerre, gauss_legendre, geometric_pieces, left_weighted, Rule};

pub const DEFAULT_INTERVAL_MODES: usize = 2000;
pub const DEFAULT_RECTANGLE_MODES: usize = 64 * 64;

/// One Dirichlet sine eigenfunction, `L^2`-normalized.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SineMode {
    pub index: [u32; 2],
    /// Eigenvalue of `-Laplace` (unit diffusion, no reaction).
    pub laplace_eigenvalue: f64,
    origin: [f64; 2],
    length: [f64; 2],
    dim: usize,
}

impl SineMode {
    fn factor(&self, axis: usize, x: f64) -> (f64, f64) {
        let l = self.length[axis];
        let w = self.index[axis] as f64 * PI / l;
        let t = w * (x - self.origin[axis]);
        let n = (2.0 / l).sqrt();
        (n * t.sin(), n * w * t.cos())
    }

    pub fn eval(&self, x: Point) -> f64 {
        let (sx, _) = self.factor(0, x[0]);
        if self.dim == 1 {
            sx
        } else {
            sx * self.factor(1, x[1]).0
        }
    }

    pub fn grad(&self, x: Point) -> [f64; 2] {
        let (sx, dx) = self.factor(0, x[0]);
        if self.dim == 1 {
            [dx, 0.0]
        } else {
            let (sy, dy) = self.factor(1, x[1]);
            [dx * sy, sx * dy]
        }
    }
}

fn box_geometry(domain: &DomainSpec) -> Result<(usize, [f64; 2], [f64; 2])> {
    match &domain.kind {
        DomainKind::Interval { a, b } => Ok((1, [*a, 0.0], [b - a, 1.0])),
        DomainKind::Rectangle { ax, bx, ay, by } => Ok((2, [*ax, *ay], [bx - ax, by - ay])),
        DomainKind::Polygon { .. } => Err(Error::UnsupportedDomain(
            "sine eigenbasis exists only for intervals and rectangles".into(),
        )),
    }
}

#[derive(PartialEq)]
struct Candidate {
    lambda: f64,
    k: u32,
    l: u32,
}

impl Eq for Candidate {}

impl Ord for Candidate {
    // reversed: BinaryHeap is a max-heap
    fn cmp(&self, other: &Self) -> Ordering {
        other.lambda.total_cmp(&self.lambda).then(other.k.cmp(&self.k)).then(other.l.cmp(&self.l))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// The first `n` Dirichlet sine modes of `domain`, ordered by eigenvalue
/// (ties broken by the first, then the second frequency index).
pub fn sine_modes(domain: &DomainSpec, n: usize) -> Result<Vec<SineMode>> {
    let (dim, origin, length) = box_geometry(domain)?;
    let mk = |k: u32, l: u32| {
        let mut lam = (k as f64 * PI / length[0]).powi(2);
        if dim == 2 {
            lam += (l as f64 * PI / length[1]).powi(2);
        }
        SineMode { index: [k, if dim == 2 { l } else { 0 }], laplace_eigenvalue: lam, origin, length, dim }
    };
    if dim == 1 {
        return Ok((1..=n as u32).map(|k| mk(k, 0)).collect());
    }
    let mut out = Vec::with_capacity(n);
    let mut heap = BinaryHeap::new();
    let mut seen = HashSet::new();
    let push = |heap: &mut BinaryHeap<Candidate>, seen: &mut HashSet<(u32, u32)>, k: u32, l: u32| {
        if seen.insert((k, l)) {
            heap.push(Candidate { lambda: mk(k, l).laplace_eigenvalue, k, l });
        }
    };
    push(&mut heap, &mut seen, 1, 1);
    while out.len() < n {
        let c = heap.pop().expect("mode enumeration never runs dry");
        out.push(mk(c.k, c.l));
        push(&mut heap, &mut seen, c.k + 1, c.l);
        push(&mut heap, &mut seen, c.k, c.l + 1);
    }
    Ok(out)
}

/// Truncated eigenbasis of `-a Laplace + c`.
#[derive(Debug, Clone)]
pub struct SpectralBasis {
    pub domain: DomainSpec,
    pub a: f64,
    pub c: f64,
    pub modes: Vec<SineMode>,
    pub lambdas: Vec<f64>,
}

/// Coefficients `w_k` of a function in a [`SpectralBasis`].
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralFunction {
    pub coeffs: Vec<f64>,
}

pub fn build_basis(domain: &DomainSpec, a: f64, c: f64, k: usize) -> Result<SpectralBasis> {
    if !(a > 0.0) || !(c >= 0.0) || k == 0 {
        return Err(Error::Parameter(format!("basis needs a > 0, c >= 0, K >= 1 (a={a}, c={c}, K={k})")));
    }
    let modes = sine_modes(domain, k)?;
    let lambdas = modes.iter().map(|m| a * m.laplace_eigenvalue + c).collect();
    Ok(SpectralBasis { domain: domain.clone(), a, c, modes, lambdas })
}

impl SpectralBasis {
    /// Basis matching the operator of `problem`, with the default truncation.
    pub fn for_problem(problem: &FractionalProblem) -> Result<Self> {
        let k = if problem.domain.dim() == 1 { DEFAULT_INTERVAL_MODES } else { DEFAULT_RECTANGLE_MODES };
        Self::for_problem_with(problem, k)
    }

    pub fn for_problem_with(problem: &FractionalProblem, k: usize) -> Result<Self> {
        let (a, c) = problem.coefficients.as_isotropic_constant().ok_or_else(|| {
            Error::UnsupportedDomain("spectral oracle needs constant isotropic coefficients".into())
        })?;
        build_basis(&problem.domain, a, c, k)
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn function(&self, coeffs: Vec<f64>) -> Result<SpectralFunction> {
        if coeffs.len() > self.len() {
            return Err(Error::Parameter(format!(
                "{} coefficients exceed the basis size {}",
                coeffs.len(),
                self.len()
            )));
        }
        Ok(SpectralFunction { coeffs })
    }

    /// `L^2` projection of `f` onto the basis.
    pub fn project(&self, f: &Forcing) -> Result<SpectralFunction> {
        let (dim, origin, length) = box_geometry(&self.domain)?;
        let coeffs = match f {
            Forcing::SpectralCoefficients(c) => return self.function(c.clone()),
            Forcing::Constant(v) => {
                let one = |axis: usize, k: u32| {
                    if k % 2 == 0 {
                        0.0
                    } else {
                        (2.0 / length[axis]).sqrt() * 2.0 * length[axis] / (k as f64 * PI)
                    }
                };
                self.modes
                    .iter()
                    .map(|m| v * one(0, m.index[0]) * if dim == 2 { one(1, m.index[1]) } else { 1.0 })
                    .collect()
            }
            Forcing::SineProduct { amplitude, frequencies } => {
                let kmax = self.max_index();
                let px = project_1d(|x| (frequencies[0] as f64 * PI * x).sin(), origin[0], length[0], kmax[0]);
                let py = if dim == 2 {
                    project_1d(|y| (frequencies[1] as f64 * PI * y).sin(), origin[1], length[1], kmax[1])
                } else {
                    vec![1.0]
                };
                self.modes
                    .iter()
                    .map(|m| {
                        let cy = if dim == 2 { py[m.index[1] as usize - 1] } else { 1.0 };
                        amplitude * px[m.index[0] as usize - 1] * cy
                    })
                    .collect()
            }
            Forcing::Closure(_) => {
                if dim == 1 {
                    let kmax = self.max_index()[0];
                    let p = project_1d(
                        |x| f.eval(&self.domain, [x, 0.0]).unwrap_or(f64::NAN),
                        origin[0],
                        length[0],
                        kmax,
                    );
                    self.modes.iter().map(|m| p[m.index[0] as usize - 1]).collect()
                } else {
                    self.project_2d(f, origin, length)?
                }
            }
        };
        Ok(SpectralFunction { coeffs })
    }

    fn max_index(&self) -> [u32; 2] {
        let mut m = [1, 1];
        for mode in &self.modes {
            m[0] = m[0].max(mode.index[0]);
            m[1] = m[1].max(mode.index[1]);
        }
        m
    }

    fn project_2d(&self, f: &Forcing, origin: [f64; 2], length: [f64; 2]) -> Result<Vec<f64>> {
        let kmax = self.max_index();
        let (xs, wx, sx) = sine_table(origin[0], length[0], kmax[0]);
        let (ys, wy, sy) = sine_table(origin[1], length[1], kmax[1]);
        // g[i][l] = sum_j w_j f(x_i, y_j) s_l(y_j)
        let mut g = vec![vec![0.0; kmax[1] as usize]; xs.len()];
        for (i, &x) in xs.iter().enumerate() {
            for (j, &y) in ys.iter().enumerate() {
                let v = wy[j] * f.eval(&self.domain, [x, y])?;
                for (l, gl) in g[i].iter_mut().enumerate() {
                    *gl += v * sy[l][j];
                }
            }
        }
        Ok(self
            .modes
            .iter()
            .map(|m| {
                let (k, l) = (m.index[0] as usize - 1, m.index[1] as usize - 1);
                (0..xs.len()).map(|i| wx[i] * sx[k][i] * g[i][l]).sum()
            })
            .collect())
    }

    /// `L^2` norm squared of `f` by quadrature (used to bound the part of
    /// `f` outside the truncated basis).
    fn forcing_norm_sq(&self, f: &Forcing) -> Result<f64> {
        let (dim, origin, length) = box_geometry(&self.domain)?;
        let kmax = self.max_index();
        let (xs, wx, _) = sine_table(origin[0], length[0], 1.max(kmax[0]));
        if dim == 1 {
            let mut acc = 0.0;
            for (x, w) in xs.iter().zip(&wx) {
                acc += w * f.eval(&self.domain, [*x, 0.0])?.powi(2);
            }
            return Ok(acc);
        }
        let (ys, wy, _) = sine_table(origin[1], length[1], 1.max(kmax[1]));
        let mut acc = 0.0;
        for (x, w1) in xs.iter().zip(&wx) {
            for (y, w2) in ys.iter().zip(&wy) {
                acc += w1 * w2 * f.eval(&self.domain, [*x, *y])?.powi(2);
            }
        }
        Ok(acc)
    }

    /// Pointwise evaluation of `w`.
    pub fn eval(&self, w: &SpectralFunction, x: Point) -> f64 {
        w.coeffs.iter().zip(&self.modes).map(|(c, m)| c * m.eval(x)).sum()
    }
}

/// Composite GL nodes and weights over `[origin, origin + length]` fine
/// enough for `sin(k pi (x - origin) / length)`, `k <= kmax`, with the
/// normalized sines tabulated per node.
fn sine_table(origin: f64, length: f64, kmax: u32) -> (Vec<f64>, Vec<f64>, Vec<Vec<f64>>) {
    let panels = (kmax as usize).max(32);
    let gl = gauss_legendre(12);
    let h = length / panels as f64;
    let mut xs = Vec::with_capacity(panels * gl.len());
    let mut ws = Vec::with_capacity(panels * gl.len());
    for p in 0..panels {
        let m = gl.mapped(origin + p as f64 * h, origin + (p + 1) as f64 * h);
        xs.extend(m.nodes);
        ws.extend(m.weights);
    }
    let norm = (2.0 / length).sqrt();
    let mut table = vec![vec![0.0; xs.len()]; kmax as usize];
    for (i, &x) in xs.iter().enumerate() {
        let theta = PI * (x - origin) / length;
        // sin(k theta) by the three-term recurrence
        let two_cos = 2.0 * theta.cos();
        let (mut prev, mut cur) = (0.0, theta.sin());
        for row in table.iter_mut() {
            row[i] = norm * cur;
            let next = two_cos * cur - prev;
            prev = cur;
            cur = next;
        }
    }
    (xs, ws, table)
}

fn project_1d(g: impl Fn(f64) -> f64, origin: f64, length: f64, kmax: u32) -> Vec<f64> {
    let (xs, ws, table) = sine_table(origin, length, kmax);
    let vals: Vec<f64> = xs.iter().zip(&ws).map(|(&x, &w)| w * g(x)).collect();
    table.iter().map(|row| row.iter().zip(&vals).map(|(s, v)| s * v).sum()).collect()
}

/// `u_k = lambda_k^{-s} f_k`.
pub fn solve_fractional(basis: &SpectralBasis, f: &SpectralFunction, s: FractionalOrder) -> SpectralFunction {
    SpectralFunction {
        coeffs: f.coeffs.iter().zip(&basis.lambdas).map(|(fk, lam)| fk * lam.powf(-s.s())).collect(),
    }
}

/// `(sum_k lambda_k^sigma w_k^2)^{1/2}` for `sigma` in `[-1, 2]`.
pub fn hs_norm(basis: &SpectralBasis, w: &SpectralFunction, sigma: f64) -> Result<f64> {
    if !(-1.0..=2.0).contains(&sigma) {
        return Err(Error::Parameter(format!("norm index {sigma} outside [-1, 2]")));
    }
    Ok(w.coeffs.iter().zip(&basis.lambdas).map(|(c, lam)| lam.powf(sigma) * c * c).sum::<f64>().sqrt())
}

/// Extension `U(x, y) = sum_k lambda_k^{-s} f_k phi_k(x) psi(sqrt(lambda_k) y)`.
pub fn extension_eval(
    basis: &SpectralBasis,
    f: &SpectralFunction,
    s: FractionalOrder,
    x: Point,
    y: f64,
) -> Result<f64> {
    if !(y >= 0.0) {
        return Err(Error::Domain(format!("extension evaluated at y = {y}")));
    }
    let profile = PsiProfile::new(s);
    let mut acc = 0.0;
    for ((fk, lam), m) in f.coeffs.iter().zip(&basis.lambdas).zip(&basis.modes) {
        if *fk == 0.0 {
            continue;
        }
        let z = lam.sqrt() * y;
        let p = if z > 700.0 { 0.0 } else { profile.value(z)? };
        acc += fk * lam.powf(-s.s()) * m.eval(x) * p;
    }
    Ok(acc)
}

/// Pairing `d_s <f, u> = d_s sum_k lambda_k^{-s} f_k^2`, which equals the
/// squared energy of the exact extension.
pub fn exact_pairing(basis: &SpectralBasis, f: &SpectralFunction, s: FractionalOrder) -> f64 {
    s.d_s() * f.coeffs.iter().zip(&basis.lambdas).map(|(fk, lam)| fk * fk * lam.powf(-s.s())).sum::<f64>()
}

/// Reference pairing for a forcing together with a bound on the part lost
/// to mode truncation.
#[derive(Debug, Clone, Copy)]
pub struct OraclePairing {
    pub value: f64,
    pub truncation_bound: f64,
}

/// `d_s <f, u>` for `problem`, with `f` projected onto `basis`. The omitted
/// modes contribute at most `d_s lambda_K^{-s} (||f||^2 - sum f_k^2)`.
/// Constant forcing on an interval is summed in closed form far beyond the
/// basis instead.
pub fn oracle_pairing(basis: &SpectralBasis, problem: &FractionalProblem) -> Result<OraclePairing> {
    let s = problem.order;
    if let (Forcing::Constant(v), DomainKind::Interval { a, b }) = (&problem.forcing, &problem.domain.kind) {
        return Ok(interval_constant_pairing(s, basis.a, basis.c, b - a, *v));
    }
    let f = basis.project(&problem.forcing)?;
    let value = exact_pairing(basis, &f, s);
    let captured: f64 = f.coeffs.iter().map(|c| c * c).sum();
    let missing = match &problem.forcing {
        Forcing::SpectralCoefficients(_) => 0.0,
        other => (basis.forcing_norm_sq(other)? - captured).max(0.0),
    };
    let lam_k = *basis.lambdas.last().expect("basis is nonempty");
    Ok(OraclePairing { value, truncation_bound: s.d_s() * lam_k.powf(-s.s()) * missing })
}

/// `d_s <f, u>` when `f = A sin(m pi x) sin(n pi y)` vanishes on every
/// edge of a polygonal domain, so that it is a Dirichlet eigenfunction of
/// `-a Laplace + c` with eigenvalue `a pi^2 (m^2 + n^2) + c`. Returns `None`
/// for other data.
pub fn eigenfunction_pairing(problem: &FractionalProblem) -> Result<Option<f64>> {
    let Forcing::SineProduct { amplitude, frequencies } = problem.forcing else {
        return Ok(None);
    };
    let Some((a, c)) = problem.coefficients.as_isotropic_constant() else {
        return Ok(None);
    };
    if problem.domain.dim() != 2 {
        return Ok(None);
    }
    let f = |x: Point| amplitude * (frequencies[0] as f64 * PI * x[0]).sin() * (frequencies[1] as f64 * PI * x[1]).sin();
    let v = problem.domain.vertices();
    let scale = amplitude.abs().max(f64::MIN_POSITIVE);
    for i in 0..v.len() {
        let (p, q) = (v[i], v[(i + 1) % v.len()]);
        for j in 0..=16 {
            let t = j as f64 / 16.0;
            if f([p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])]).abs() > 1e-12 * scale {
                return Ok(None);
            }
        }
    }
    let mut mesh = crate::fem_omega::TriMesh::coarse(&problem.domain)?;
    let h = 0.25 / (frequencies[0].max(frequencies[1]).max(1) as f64);
    mesh.refine_to(h, &[]);
    let rule = crate::quadrature::triangle_rule(10);
    let mut norm_sq = 0.0;
    for t in &mesh.triangles {
        let [p0, p1, p2] = t.map(|i| mesh.vertices[i]);
        let jac = (p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1]);
        for (r, w) in rule.points.iter().zip(&rule.weights) {
            let x = [
                p0[0] + r[0] * (p1[0] - p0[0]) + r[1] * (p2[0] - p0[0]),
                p0[1] + r[0] * (p1[1] - p0[1]) + r[1] * (p2[1] - p0[1]),
            ];
            norm_sq += w * jac * f(x).powi(2);
        }
    }
    let m2 = (frequencies[0] as f64).powi(2) + (frequencies[1] as f64).powi(2);
    let lambda = a * PI * PI * m2 + c;
    let s = problem.order;
    Ok(Some(s.d_s() * lambda.powf(-s.s()) * norm_sq))
}

/// Constant `v` on an interval of length `len`: only odd modes contribute,
/// `f_k^2 = 8 v^2 len / (k pi)^2`. Terms up to `k = 2*10^6` are summed
/// directly, smallest first, and the remainder is integrated term-wise in a
/// binomial expansion.
fn interval_constant_pairing(s: FractionalOrder, a: f64, c: f64, len: f64, v: f64) -> OraclePairing {
    let sv = s.s();
    let kmax: u64 = 2_000_001;
    let term = |k: f64| {
        let lam = a * (k * PI / len).powi(2) + c;
        8.0 * v * v * len / (k * PI).powi(2) * lam.powf(-sv)
    };
    let mut sum = 0.0;
    let mut k = kmax;
    while k >= 1 {
        sum += term(k as f64);
        if k < 2 {
            break;
        }
        k -= 2;
    }
    // sum_{k odd > kmax} ~ 1/2 int_{kmax+1}^inf g(x) dx (midpoint rule on odd
    // integers), g(x) = B x^{-2} (q x^2 + c)^{-s}, q = a pi^2 / len^2.
    let q = a * (PI / len).powi(2);
    let bcoef = 8.0 * v * v * len / (PI * PI);
    let x0 = kmax as f64 + 1.0;
    let mut tail = 0.0;
    let mut binom = 1.0;
    let ratio = c / q;
    for m in 0..20 {
        let e = 1.0 + 2.0 * sv + 2.0 * m as f64;
        let t = binom * ratio.powi(m) * x0.powf(-e) / e;
        tail += t;
        if t.abs() < 1e-20 * tail.abs() {
            break;
        }
        binom *= (-sv - m as f64) / (m as f64 + 1.0);
    }
    tail *= 0.5 * bcoef * q.powf(-sv);
    let d = s.d_s();
    OraclePairing { value: d * (sum + tail), truncation_bound: d * tail / (x0 * x0) }
}

/// Quadrature of `int_start^inf g(z) exp(-rate z) dz`, where `scaled(z)`
/// returns `g(z)` and `g(z) ~ z^p` near zero. Returns the estimate from
/// two resolutions.
fn half_line(start: f64, p: f64, rate: f64, scaled: &dyn Fn(f64) -> Result<f64>, n: usize, n_lag: usize) -> Result<f64> {
    let z0 = start.max(2.0).max(4.0 / rate);
    let mut total = 0.0;
    let gl = gauss_legendre(n);
    let piece = |rule: &Rule, total: &mut f64, weight_power: f64| -> Result<()> {
        for (&z, &w) in rule.nodes.iter().zip(&rule.weights) {
            *total += w * scaled(z)? * (-rate * z).exp() * z.powf(-weight_power);
        }
        Ok(())
    };
    if start < z0 {
        let mut left = start;
        if start == 0.0 {
            let eps = 1e-14 * z0;
            piece(&left_weighted(n, p, eps), &mut total, p)?;
            left = eps;
        }
        for (a, b) in geometric_pieces(left, z0, 2.0) {
            piece(&gl.mapped(a, b), &mut total, 0.0)?;
        }
    }
    let lag = gauss_laguerre(n_lag);
    let mut tail = 0.0;
    for (&u, &w) in lag.nodes.iter().zip(&lag.weights) {
        tail += w * scaled(z0 + u / rate)?;
    }
    Ok(total + tail * (-rate * z0).exp() / rate)
}

fn checked_half_line(start: f64, p: f64, rate: f64, scaled: &dyn Fn(f64) -> Result<f64>) -> Result<f64> {
    let coarse = half_line(start, p, rate, scaled, 16, 48)?;
    let fine = half_line(start, p, rate, scaled, 24, 64)?;
    let err = (fine - coarse).abs();
    if err > 1e-10 * fine.abs() + f64::MIN_POSITIVE {
        return Err(Error::Accuracy { estimate: fine, error: err });
    }
    Ok(fine)
}

/// `T(Z) = int_Z^inf z^alpha (psi^2 + psi'^2) dz`; `T(0) = d_s`.
pub fn profile_tail(s: FractionalOrder, z: f64) -> Result<f64> {
    if !(z >= 0.0) {
        return Err(Error::Domain(format!("tail start {z}")));
    }
    if z > 350.0 {
        return Ok(0.0);
    }
    let profile = PsiProfile::new(s);
    let alpha = s.alpha();
    let scaled = |t: f64| -> Result<f64> {
        if t == 0.0 {
            return Ok(0.0);
        }
        // psi = c t^s e^{-t} (e^t K_s)
        let ks = crate::bessel::bessel_k_scaled(s.s(), t)?;
        let k1s = crate::bessel::bessel_k_scaled(1.0 - s.s(), t)?;
        let pre = profile.c_s * t.powf(s.s());
        Ok(t.powf(alpha) * pre * pre * (ks * ks + k1s * k1s))
    };
    checked_half_line(z, -alpha.abs(), 2.0, &scaled)
}

/// Energy of the exact extension outside the truncated cylinder,
/// `int_Y^inf int_Omega y^alpha (a |grad_x U|^2 + c U^2 + |d_y U|^2)`,
/// which per mode equals `u_k^2 lambda_k^s T(sqrt(lambda_k) Y)`.
pub fn tail_energy(basis: &SpectralBasis, f: &SpectralFunction, s: FractionalOrder, y_cut: f64) -> Result<f64> {
    if !(y_cut >= 0.0) {
        return Err(Error::Domain(format!("truncation height {y_cut}")));
    }
    let t0 = if y_cut == 0.0 { Some(profile_tail(s, 0.0)?) } else { None };
    let mut acc = 0.0;
    for (fk, lam) in f.coeffs.iter().zip(&basis.lambdas) {
        if *fk == 0.0 {
            continue;
        }
        let t = match t0 {
            Some(t) => t,
            None => profile_tail(s, lam.sqrt() * y_cut)?,
        };
        let uk = fk * lam.powf(-s.s());
        acc += uk * uk * lam.powf(s.s()) * t;
    }
    Ok(acc)
}

/// Norms `N_l = ||d_y^{l+1} U||_{L^2(y^{alpha+2l} e^{gamma y})}` for
/// `l = 0..=max_l`; requires `gamma < 2 sqrt(lambda_1)`.
pub fn regularity_norms(
    basis: &SpectralBasis,
    f: &SpectralFunction,
    s: FractionalOrder,
    gamma: f64,
    max_l: usize,
) -> Result<Vec<f64>> {
    if max_l + 1 > crate::bessel::MAX_DERIVATIVE {
        return Err(Error::UnsupportedOrder(max_l + 1));
    }
    let lam1 = basis.lambdas[0];
    if !(gamma >= 0.0 && gamma < 2.0 * lam1.sqrt()) {
        return Err(Error::Parameter(format!("weight rate {gamma} must lie in [0, 2 sqrt(lambda_1))")));
    }
    let profile = PsiProfile::new(s);
    let alpha = s.alpha();
    let mut out = Vec::with_capacity(max_l + 1);
    for l in 0..=max_l {
        let mut acc = 0.0;
        for (fk, lam) in f.coeffs.iter().zip(&basis.lambdas) {
            if *fk == 0.0 {
                continue;
            }
            let rate = 2.0 - gamma / lam.sqrt();
            let scaled = |z: f64| -> Result<f64> {
                if z == 0.0 {
                    return Ok(0.0);
                }
                let d = profile.derivative(l + 1, z)? * z.exp();
                Ok(z.powf(alpha + 2.0 * l as f64) * d * d)
            };
            let integral = checked_half_line(0.0, 2.0 * s.s() - 1.0, rate, &scaled)?;
            let uk = fk * lam.powf(-s.s());
            acc += uk * uk * lam.powf(s.s()) * integral;
        }
        out.push(acc.sqrt());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{make_order, Coefficients};

    fn unit() -> DomainSpec {
        DomainSpec::interval(0.0, 1.0).unwrap()
    }

    #[test]
    fn interval_basis() {
        let b = build_basis(&unit(), 1.0, 0.0, 10).unwrap();
        assert!((b.lambdas[0] - PI * PI).abs() < 1e-12);
        let x = 0.3;
        assert!((b.modes[0].eval([x, 0.0]) - 2f64.sqrt() * (PI * x).sin()).abs() < 1e-15);
        let b = build_basis(&unit(), 1.0, 5.0, 10).unwrap();
        for (k, lam) in b.lambdas.iter().enumerate() {
            let kk = (k + 1) as f64;
            assert!((lam - (kk * kk * PI * PI + 5.0)).abs() < 1e-10);
        }
    }

    #[test]
    fn rectangle_basis_sorted_and_orthonormal() {
        let d = DomainSpec::unit_square();
        let b = build_basis(&d, 1.0, 0.0, 40).unwrap();
        assert!((b.lambdas[0] - 2.0 * PI * PI).abs() < 1e-12);
        let p = [0.3, 0.8];
        assert!((b.modes[0].eval(p) - 2.0 * (PI * 0.3).sin() * (PI * 0.8).sin()).abs() < 1e-14);
        assert!(b.lambdas.windows(2).all(|w| w[0] <= w[1]));
        // (1,2) before (2,1) on ties
        assert_eq!(b.modes[1].index, [1, 2]);
        assert_eq!(b.modes[2].index, [2, 1]);
        let gl = gauss_legendre(30);
        let q = gl.mapped(0.0, 1.0);
        for i in [0, 3, 7] {
            for j in [0, 3, 7] {
                let mut acc = 0.0;
                for (x, wx) in q.nodes.iter().zip(&q.weights) {
                    for (y, wy) in q.nodes.iter().zip(&q.weights) {
                        acc += wx * wy * b.modes[i].eval([*x, *y]) * b.modes[j].eval([*x, *y]);
                    }
                }
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((acc - want).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn polygon_rejected() {
        assert!(matches!(build_basis(&DomainSpec::l_shape(), 1.0, 0.0, 5), Err(Error::UnsupportedDomain(_))));
    }

    #[test]
    fn half_order_solution_and_norms() {
        let b = build_basis(&unit(), 1.0, 0.0, 10).unwrap();
        let s = make_order(0.5).unwrap();
        let f = b.function(vec![1.0]).unwrap();
        let u = solve_fractional(&b, &f, s);
        assert!((u.coeffs[0] - 1.0 / PI).abs() < 1e-15);
        assert!((hs_norm(&b, &f, 0.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((hs_norm(&b, &u, 0.5).unwrap() - PI.powf(-0.5)).abs() < 1e-15);
        let w = b.function(vec![1.0, 1.0]).unwrap();
        assert!((hs_norm(&b, &w, 1.0).unwrap() - PI * 5f64.sqrt()).abs() < 1e-12);
        assert!(hs_norm(&b, &w, 2.5).is_err());
        let zero = b.function(vec![]).unwrap();
        assert!(solve_fractional(&b, &zero, s).coeffs.is_empty());
    }

    #[test]
    fn sine_product_forcing_on_square() {
        let s = make_order(0.3).unwrap();
        let amp = (2.0 * PI * PI).powf(0.3);
        let p = FractionalProblem::new(
            0.3,
            DomainSpec::unit_square(),
            Coefficients::laplacian(),
            Forcing::SineProduct { amplitude: amp, frequencies: [1, 1] },
        )
        .unwrap();
        let b = build_basis(&p.domain, 1.0, 0.0, 30).unwrap();
        let f = b.project(&p.forcing).unwrap();
        let u = solve_fractional(&b, &f, s);
        assert!((u.coeffs[0] - 0.5).abs() < 1e-13);
        assert!(u.coeffs[1..].iter().all(|c| c.abs() < 1e-13));
        let op = oracle_pairing(&b, &p).unwrap();
        assert!(op.truncation_bound < 1e-12);
        assert!((op.value - s.d_s() * amp / 4.0).abs() < 1e-12);
    }

    #[test]
    fn constant_projection_matches_quadrature() {
        let d = DomainSpec::rectangle(0.0, 2.0, -1.0, 0.5).unwrap();
        let b = build_basis(&d, 1.0, 0.0, 20).unwrap();
        let exact = b.project(&Forcing::Constant(3.0)).unwrap();
        let numeric = b.project(&Forcing::closure(|_| 3.0)).unwrap();
        for (e, n) in exact.coeffs.iter().zip(&numeric.coeffs) {
            assert!((e - n).abs() < 1e-12);
        }
    }

    #[test]
    fn extension_values() {
        let b = build_basis(&unit(), 1.0, 0.0, 10).unwrap();
        let s = make_order(0.5).unwrap();
        let f = b.function(vec![1.0]).unwrap();
        let v = extension_eval(&b, &f, s, [0.5, 0.0], 1.0).unwrap();
        assert!((v - 2f64.sqrt() * (-PI).exp() / PI).abs() < 1e-15);
        let u = solve_fractional(&b, &f, s);
        let tr = extension_eval(&b, &f, s, [0.37, 0.0], 0.0).unwrap();
        assert!((tr - b.eval(&u, [0.37, 0.0])).abs() < 1e-12);
        assert!(extension_eval(&b, &f, s, [0.5, 0.0], 50.0).unwrap().abs() < 1e-40);
    }

    #[test]
    fn profile_tail_at_zero_is_d_s() {
        for sv in [0.1, 0.25, 0.5, 0.75, 0.9] {
            let s = make_order(sv).unwrap();
            let t = profile_tail(s, 0.0).unwrap();
            assert!(((t - s.d_s()) / s.d_s()).abs() < 1e-9, "s={sv}: {t} vs {}", s.d_s());
        }
    }

    #[test]
    fn tail_energy_identities() {
        let b = build_basis(&unit(), 1.0, 0.0, 50).unwrap();
        let s = make_order(0.5).unwrap();
        let f = b.function(vec![1.0]).unwrap();
        let total = tail_energy(&b, &f, s, 0.0).unwrap();
        assert!((total - exact_pairing(&b, &f, s)).abs() < 1e-10);
        assert!((total - 1.0 / PI).abs() < 1e-10);
        let r = tail_energy(&b, &f, s, 1.0).unwrap() / tail_energy(&b, &f, s, 2.0).unwrap();
        let want = PI.exp();
        assert!(r >= want / 2.0 && r <= 2.0 * want * want, "ratio {r}");
        assert!(tail_energy(&b, &f, s, 40.0).unwrap() < 1e-80);
    }

    #[test]
    fn interval_constant_pairing_matches_mode_sum() {
        let s = make_order(0.25).unwrap();
        let p = FractionalProblem::new(0.25, unit(), Coefficients::laplacian(), Forcing::Constant(1.0)).unwrap();
        let b = build_basis(&unit(), 1.0, 0.0, 2000).unwrap();
        let f = b.project(&Forcing::Constant(1.0)).unwrap();
        let truncated = exact_pairing(&b, &f, s);
        let full = oracle_pairing(&b, &p).unwrap().value;
        assert!(full > truncated);
        // omitted part is about d_s sum_{k>2000, odd} 8 / (k pi)^{2.5}
        let omitted: f64 = (2001..400_001).step_by(2).map(|k| 8.0 / (k as f64 * PI).powf(2.5)).sum();
        assert!(((full - truncated) / s.d_s() - omitted).abs() < 1e-3 * omitted);
    }

    #[test]
    fn regularity_norms_grow_factorially_at_half() {
        let b = build_basis(&unit(), 1.0, 0.0, 4).unwrap();
        let s = make_order(0.5).unwrap();
        let f = b.function(vec![1.0]).unwrap();
        let lam = b.lambdas[0];
        let n = regularity_norms(&b, &f, s, lam.sqrt(), 3).unwrap();
        let fact = [1.0, 2.0, 24.0, 720.0];
        let u1 = 1.0 / PI;
        for l in 0..=3 {
            let want = (u1 * u1 * lam.sqrt() * fact[l]).sqrt();
            assert!(((n[l] - want) / want).abs() < 1e-8, "l={l}: {} vs {want}", n[l]);
        }
    }

    #[test]
    fn l_shape_eigenfunction_pairing() {
        use crate::problem::{Coefficients, DomainSpec};
        let s = 0.3;
        let amp = (2.0 * PI * PI).powf(s);
        let p = FractionalProblem::new(
            s,
            DomainSpec::l_shape(),
            Coefficients::laplacian(),
            Forcing::SineProduct { amplitude: amp, frequencies: [1, 1] },
        )
        .unwrap();
        let got = eigenfunction_pairing(&p).unwrap().unwrap();
        // d_s <f, u> with u = sin sin and ||sin sin||^2 = 3/4
        let exact = p.order.d_s() * amp * 0.75;
        assert!((got - exact).abs() < 1e-12 * exact, "{got} vs {exact}");
        let p1 = p.with_order(0.5).unwrap();
        let mut p2 = p1.clone();
        p2.forcing = Forcing::SineProduct { amplitude: 1.0, frequencies: [1, 1] };
        p2.domain = DomainSpec::polygon(vec![[0.0, 0.0], [1.5, 0.0], [1.5, 1.0], [0.0, 1.0]]).unwrap();
        assert!(eigenfunction_pairing(&p2).unwrap().is_none());
    }
}
