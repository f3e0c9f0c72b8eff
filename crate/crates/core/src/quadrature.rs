//! Gauss-type quadrature rules: Legendre, Jacobi, Lobatto, Laguerre, and
//! collapsed (Duffy) rules on the reference triangle.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::special::gamma;

/// Nodes and weights of a 1D rule.
#[derive(Debug, Clone)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule {
    /// Affinely maps a rule from `[-1, 1]` onto `[a, b]` (weights scaled by
    /// the Jacobian only).
    pub fn mapped(&self, a: f64, b: f64) -> Rule {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        Rule {
            nodes: self.nodes.iter().map(|x| mid + half * x).collect(),
            weights: self.weights.iter().map(|w| w * half).collect(),
        }
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// Golub-Welsch: nodes are eigenvalues of the Jacobi matrix, weights are
/// `mu0` times the squared first eigenvector components.
fn golub_welsch(diag: &[f64], off: &[f64], mu0: f64) -> Rule {
    let n = diag.len();
    let mut t = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        t[(i, i)] = diag[i];
        if i + 1 < n {
            t[(i, i + 1)] = off[i];
            t[(i + 1, i)] = off[i];
        }
    }
    let eig = SymmetricEigen::new(t);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|j| (eig.eigenvalues[j], mu0 * eig.eigenvectors[(0, j)].powi(2)))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    Rule { nodes: pairs.iter().map(|p| p.0).collect(), weights: pairs.iter().map(|p| p.1).collect() }
}

/// Legendre polynomial `P_n(x)` and its derivative.
pub fn legendre(n: usize, x: f64) -> (f64, f64) {
    if n == 0 {
        return (1.0, 0.0);
    }
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let nf = n as f64;
    let dp = if (x.abs() - 1.0).abs() < 1e-15 {
        x.powi(n as i32 + 1) * nf * (nf + 1.0) / 2.0
    } else {
        nf * (x * p1 - p0) / (x * x - 1.0)
    };
    (p1, dp)
}

/// `n`-point Gauss-Legendre rule on `[-1, 1]` (Newton-polished nodes).
pub fn gauss_legendre(n: usize) -> Rule {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = -(std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre(n, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = x;
        weights[i] = w;
        nodes[n - 1 - i] = -x;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    Rule { nodes, weights }
}

/// `n`-point Gauss-Jacobi rule for `int_{-1}^{1} (1-x)^a (1+x)^b f(x) dx`.
pub fn gauss_jacobi(n: usize, a: f64, b: f64) -> Rule {
    assert!(n >= 1 && a > -1.0 && b > -1.0);
    let ab = a + b;
    let mut diag = vec![0.0; n];
    let mut off = vec![0.0; n.saturating_sub(1)];
    diag[0] = (b - a) / (ab + 2.0);
    for k in 1..n {
        let kf = k as f64;
        let t = 2.0 * kf + ab;
        diag[k] = (b * b - a * a) / (t * (t + 2.0));
        off[k - 1] = if k == 1 {
            (4.0 * (1.0 + a) * (1.0 + b) / ((2.0 + ab).powi(2) * (3.0 + ab))).sqrt()
        } else {
            (4.0 * kf * (kf + a) * (kf + b) * (kf + ab) / (t * t * (t + 1.0) * (t - 1.0))).sqrt()
        };
    }
    let mu0 = 2f64.powf(ab + 1.0) * gamma(a + 1.0) * gamma(b + 1.0) / gamma(ab + 2.0);
    golub_welsch(&diag, &off, mu0)
}

/// Rule for `int_0^h y^p f(y) dy`, `p > -1`, built from Gauss-Jacobi.
pub fn left_weighted(n: usize, p: f64, h: f64) -> Rule {
    let base = gauss_jacobi(n, 0.0, p);
    let scale = (0.5 * h).powf(p + 1.0);
    Rule {
        nodes: base.nodes.iter().map(|x| 0.5 * h * (x + 1.0)).collect(),
        weights: base.weights.iter().map(|w| w * scale).collect(),
    }
}

/// `n`-point Gauss-Lobatto rule on `[-1, 1]` (`n >= 2`), endpoints included.
pub fn gauss_lobatto(n: usize) -> Rule {
    assert!(n >= 2);
    let mut nodes = vec![-1.0];
    if n > 2 {
        let interior = gauss_jacobi(n - 2, 1.0, 1.0);
        for &x0 in &interior.nodes {
            // polish as roots of P'_{n-1}: (1-x^2) P'' = 2x P' - n(n-1) P
            let m = n - 1;
            let mut x = x0;
            for _ in 0..20 {
                let (p, dp) = legendre(m, x);
                let d2p = (2.0 * x * dp - (m * (m + 1)) as f64 * p) / (1.0 - x * x);
                let dx = dp / d2p;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            nodes.push(x);
        }
    }
    nodes.push(1.0);
    let nf = n as f64;
    let weights = nodes
        .iter()
        .map(|&x| {
            let (p, _) = legendre(n - 1, x);
            2.0 / (nf * (nf - 1.0) * p * p)
        })
        .collect();
    Rule { nodes, weights }
}

/// `n`-point Gauss-Laguerre rule for `int_0^inf e^{-x} f(x) dx`.
pub fn gauss_laguerre(n: usize) -> Rule {
    let diag: Vec<f64> = (0..n).map(|k| 2.0 * k as f64 + 1.0).collect();
    let off: Vec<f64> = (1..n).map(|k| k as f64).collect();
    golub_welsch(&diag, &off, 1.0)
}

/// Splits `[a, b]` (`0 <= a < b`) into pieces whose endpoint ratio is at
/// most `ratio`. For `a == 0` the whole interval is returned.
pub fn geometric_pieces(a: f64, b: f64, ratio: f64) -> Vec<(f64, f64)> {
    assert!(a >= 0.0 && b > a && ratio > 1.0);
    let mut pieces = Vec::new();
    if a == 0.0 {
        return vec![(0.0, b)];
    }
    let mut left = a;
    while left * ratio < b {
        pieces.push((left, left * ratio));
        left *= ratio;
    }
    pieces.push((left, b));
    pieces
}

/// Rule for `int_a^b y^p f(y) dy` with `f` smooth. The weight is folded into
/// the returned weights. For `a == 0` a Gauss-Jacobi rule absorbs the
/// endpoint singularity; otherwise GL is applied on geometric pieces
/// with ratio at most 2 so `y^p` stays analytic on each.
pub fn weighted_interval_rule(a: f64, b: f64, p: f64, n: usize) -> Rule {
    if a == 0.0 {
        return left_weighted(n, p, b);
    }
    let gl = gauss_legendre(n);
    let mut nodes = Vec::new();
    let mut weights = Vec::new();
    for (l, r) in geometric_pieces(a, b, 2.0) {
        let m = gl.mapped(l, r);
        for (x, w) in m.nodes.into_iter().zip(m.weights) {
            weights.push(w * x.powf(p));
            nodes.push(x);
        }
    }
    Rule { nodes, weights }
}

/// Collapsed rule on the reference triangle `{x, y >= 0, x + y <= 1}`;
/// exact for polynomials of degree `2n - 1`. Weights sum to 1/2.
#[derive(Debug, Clone)]
pub struct TriangleRule {
    pub points: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
}

pub fn triangle_rule(n: usize) -> TriangleRule {
    let gj = gauss_jacobi(n, 1.0, 0.0);
    let gl = gauss_legendre(n);
    let mut points = Vec::with_capacity(n * n);
    let mut weights = Vec::with_capacity(n * n);
    for (&u, &wu) in gj.nodes.iter().zip(&gj.weights) {
        let x = 0.5 * (1.0 + u);
        for (&v, &wv) in gl.nodes.iter().zip(&gl.weights) {
            let t = 0.5 * (1.0 + v);
            points.push([x, t * (1.0 - x)]);
            weights.push(wu * wv / 8.0);
        }
    }
    TriangleRule { points, weights }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_rule_exactness() {
        for n in 1..40 {
            let r = gauss_legendre(n);
            for k in 0..(2 * n) {
                let exact = if k % 2 == 1 { 0.0 } else { 2.0 / (k as f64 + 1.0) };
                let got = r.integrate(|x| x.powi(k as i32));
                assert!((got - exact).abs() < 1e-14, "n={n} k={k}: {got}");
            }
        }
    }

    #[test]
    fn jacobi_rule_matches_monomial_moments() {
        for &p in &[-0.8, -0.3, 0.0, 0.5, 0.9] {
            for n in [1, 5, 17, 40] {
                let r = left_weighted(n, p, 2.0);
                for k in 0..(2 * n).min(60) {
                    let exact = 2f64.powf(k as f64 + p + 1.0) / (k as f64 + p + 1.0);
                    let got = r.integrate(|y| y.powi(k as i32));
                    assert!(((got - exact) / exact).abs() < 1e-12, "p={p} n={n} k={k}");
                }
            }
        }
    }

    #[test]
    fn weighted_rule_away_from_zero() {
        let p = -0.4;
        let (a, b) = (0.01, 3.0);
        let r = weighted_interval_rule(a, b, p, 20);
        for k in 0..10 {
            let e = k as f64 + p + 1.0;
            let exact = (b.powf(e) - a.powf(e)) / e;
            let got = r.integrate(|y| y.powi(k));
            assert!(((got - exact) / exact).abs() < 1e-13);
        }
    }

    #[test]
    fn lobatto_rule() {
        for n in 2..25 {
            let r = gauss_lobatto(n);
            assert_eq!(r.nodes[0], -1.0);
            assert_eq!(r.nodes[n - 1], 1.0);
            for k in 0..(2 * n - 2) {
                let exact = if k % 2 == 1 { 0.0 } else { 2.0 / (k as f64 + 1.0) };
                assert!((r.integrate(|x| x.powi(k as i32)) - exact).abs() < 1e-13, "n={n} k={k}");
            }
        }
    }

    #[test]
    fn laguerre_rule() {
        let r = gauss_laguerre(32);
        let mut fact = 1.0;
        for k in 0..20 {
            if k > 0 {
                fact *= k as f64;
            }
            let got = r.integrate(|x| x.powi(k));
            assert!(((got - fact) / fact).abs() < 1e-11, "k={k}");
        }
    }

    #[test]
    fn triangle_rule_exactness() {
        // int_T x^i y^j = i! j! / (i + j + 2)!
        let fact = |n: u32| (1..=n).map(f64::from).product::<f64>();
        let r = triangle_rule(5);
        for i in 0..6u32 {
            for j in 0..(10 - i) {
                let exact = fact(i) * fact(j) / fact(i + j + 2);
                let got: f64 = r.points.iter().zip(&r.weights).map(|(p, w)| w * p[0].powi(i as i32) * p[1].powi(j as i32)).sum();
                assert!(((got - exact) / exact).abs() < 1e-13, "{i} {j}");
            }
        }
    }
}
