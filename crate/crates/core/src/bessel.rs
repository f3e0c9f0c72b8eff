//! Modified Bessel function of the second kind `K_nu` for real order
//! `|nu| <= 3/2`, and the extension profile
//! `psi(z) = c_s z^s K_s(z)`, `c_s = 2^(1-s) / Gamma(s)`.
//!
//! `K_nu` is evaluated with Temme's series for `z <= 2` and Steed's
//! continued fraction above, both for the reduced order
//! `mu = nu - round(nu)`, followed by forward recurrence in the order.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::problem::FractionalOrder;
use crate::special::{gamma, temme_gammas};

const EPS: f64 = 1e-16;
const MAX_ITER: usize = 10_000;
/// Largest supported `|nu|`.
pub const MAX_ORDER: f64 = 1.5;
/// Highest derivative of `psi` available through the ODE recurrence.
pub const MAX_DERIVATIVE: usize = 12;

/// `K_nu(z)` for `|nu| <= 3/2`, `z > 0`; uses `K_nu = K_{-nu}`.
pub fn bessel_k(nu: f64, z: f64) -> Result<f64> {
    let (k, _) = scaled_pair(nu, z)?;
    Ok(k * (-z).exp())
}

/// `exp(z) K_nu(z)`; avoids underflow for large `z`.
pub fn bessel_k_scaled(nu: f64, z: f64) -> Result<f64> {
    Ok(scaled_pair(nu, z)?.0)
}

/// Returns `(exp(z) K_nu(z), exp(z) K_{nu+1}(z))` for `nu >= 0`.
fn scaled_pair(nu: f64, z: f64) -> Result<(f64, f64)> {
    if !(nu.abs() <= MAX_ORDER) {
        return Err(Error::Domain(format!("Bessel order {nu} outside [-{MAX_ORDER}, {MAX_ORDER}]")));
    }
    if !(z > 0.0) {
        return Err(Error::Domain(format!("K_nu requires z > 0, got {z}")));
    }
    if z < 1e-300 {
        return Err(Error::SingularEvaluation(format!("K_nu overflows at z = {z:e}")));
    }
    let nu = nu.abs();
    if nu == 0.5 {
        let k = (PI / (2.0 * z)).sqrt();
        return Ok((k, k * (1.0 + 1.0 / z)));
    }
    let nl = (nu + 0.5).floor() as usize;
    let mu = nu - nl as f64;
    let (mut kmu, mut k1) = if z <= 2.0 { temme(mu, z) } else { steed(mu, z) };
    let two_over_z = 2.0 / z;
    for i in 1..=nl {
        let next = (mu + i as f64) * two_over_z * k1 + kmu;
        kmu = k1;
        k1 = next;
    }
    Ok((kmu, k1))
}

/// Temme's series for `|mu| <= 1/2`, `z <= 2`; returns scaled `(K_mu, K_{mu+1})`.
fn temme(mu: f64, z: f64) -> (f64, f64) {
    let x2 = 0.5 * z;
    let pimu = PI * mu;
    let fact = if pimu.abs() < EPS { 1.0 } else { pimu / pimu.sin() };
    let d = -x2.ln();
    let e = mu * d;
    let fact2 = if e.abs() < EPS { 1.0 } else { e.sinh() / e };
    let (gam1, gam2, gampl, gammi) = temme_gammas(mu);
    let mut ff = fact * (gam1 * e.cosh() + gam2 * fact2 * d);
    let mut sum = ff;
    let ee = e.exp();
    let mut p = 0.5 * ee / gampl;
    let mut q = 0.5 / (ee * gammi);
    let mut c = 1.0;
    let dd = x2 * x2;
    let mut sum1 = p;
    let mu2 = mu * mu;
    for i in 1..MAX_ITER {
        let fi = i as f64;
        ff = (fi * ff + p + q) / (fi * fi - mu2);
        c *= dd / fi;
        p /= fi - mu;
        q /= fi + mu;
        let del = c * ff;
        sum += del;
        sum1 += c * (p - fi * ff);
        if del.abs() < sum.abs() * EPS {
            break;
        }
    }
    let scale = z.exp();
    (sum * scale, sum1 * (2.0 / z) * scale)
}

/// Steed's continued fraction (CF2) for `|mu| <= 1/2`, `z > 2`; scaled output.
fn steed(mu: f64, z: f64) -> (f64, f64) {
    let mut b = 2.0 * (1.0 + z);
    let mut d = 1.0 / b;
    let mut delh = d;
    let mut h = d;
    let mut q1 = 0.0;
    let mut q2 = 1.0;
    let a1 = 0.25 - mu * mu;
    let mut q = a1;
    let mut c = a1;
    let mut a = -a1;
    let mut s = 1.0 + q * delh;
    for i in 2..MAX_ITER {
        a -= 2.0 * (i - 1) as f64;
        c = -a * c / i as f64;
        let qnew = (q1 - b * q2) / a;
        q1 = q2;
        q2 = qnew;
        q += c * qnew;
        b += 2.0;
        d = 1.0 / (b + a * d);
        delh = (b * d - 1.0) * delh;
        h += delh;
        let dels = q * delh;
        s += dels;
        if (dels / s).abs() < EPS {
            break;
        }
    }
    h *= a1;
    let kmu = (PI / (2.0 * z)).sqrt() / s;
    let k1 = kmu * (mu + z + 0.5 - h) / z;
    (kmu, k1)
}

/// Independent route for `0 < |nu| < 1`, `nu != 1/2`:
/// `K_nu = pi/2 (I_{-nu} - I_nu) / sin(nu pi)` with power series for
/// `I_{+-nu}`. Accurate for `z <= 2`; loses digits as `nu` approaches an
/// integer.
pub fn bessel_k_reflection(nu: f64, z: f64) -> Result<f64> {
    let nu = nu.abs();
    if !(nu > 0.0 && nu < 1.0) {
        return Err(Error::Domain(format!("reflection formula needs 0 < |nu| < 1, got {nu}")));
    }
    if !(z > 0.0) {
        return Err(Error::Domain(format!("K_nu requires z > 0, got {z}")));
    }
    if (nu - 0.5).abs() < 1e-8 {
        return Ok((PI / (2.0 * z)).sqrt() * (-z).exp());
    }
    let i_series = |order: f64| -> f64 {
        let x2 = 0.5 * z;
        let mut term = x2.powf(order) / gamma(order + 1.0);
        let mut sum = term;
        for k in 1..500 {
            let fk = k as f64;
            term *= x2 * x2 / (fk * (fk + order));
            sum += term;
            if term.abs() < sum.abs() * EPS {
                break;
            }
        }
        sum
    };
    Ok(0.5 * PI * (i_series(-nu) - i_series(nu)) / (nu * PI).sin())
}

/// `psi(z) = c_s z^s K_s(z)`, the decaying solution of
/// `psi'' + (alpha / z) psi' = psi` with `psi(0) = 1`.
#[derive(Debug, Clone, Copy)]
pub struct PsiProfile {
    pub order: FractionalOrder,
    pub c_s: f64,
}

impl PsiProfile {
    pub fn new(order: FractionalOrder) -> Self {
        let s = order.s();
        Self { order, c_s: 2f64.powf(1.0 - s) / gamma(s) }
    }

    pub fn value(&self, z: f64) -> Result<f64> {
        if z < 0.0 || z.is_nan() {
            return Err(Error::Domain(format!("psi evaluated at z = {z}")));
        }
        if z == 0.0 {
            return Ok(1.0);
        }
        let s = self.order.s();
        let k = bessel_k_scaled(s, z)?;
        Ok(self.c_s * (s * z.ln() - z).exp() * k)
    }

    /// `psi'(z) = -c_s z^s K_{1-s}(z)`.
    pub fn first_derivative(&self, z: f64) -> Result<f64> {
        if !(z > 0.0) {
            return Err(Error::Domain(format!("psi' needs z > 0, got {z}")));
        }
        let s = self.order.s();
        let k = bessel_k_scaled(1.0 - s, z)?;
        Ok(-self.c_s * (s * z.ln() - z).exp() * k)
    }

    /// `psi^(ell)(z)` through `psi^(n) = P_n(1/z) psi + Q_n(1/z) psi'`, where
    /// the polynomials follow from differentiating the ODE.
    pub fn derivative(&self, ell: usize, z: f64) -> Result<f64> {
        if ell > MAX_DERIVATIVE {
            return Err(Error::UnsupportedOrder(ell));
        }
        if ell == 0 {
            return self.value(z);
        }
        if !(z > 0.0) {
            return Err(Error::Domain(format!("psi derivatives need z > 0, got {z}")));
        }
        let value = self.value(z)?;
        let slope = self.first_derivative(z)?;
        let (p, q) = derivative_polynomials(self.order.alpha(), ell);
        let w = 1.0 / z;
        Ok(horner(&p, w) * value + horner(&q, w) * slope)
    }
}

fn horner(c: &[f64], w: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &ci| acc * w + ci)
}

/// Coefficients (in powers of `w = 1/z`) of `P_n`, `Q_n`.
fn derivative_polynomials(alpha: f64, n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut p = vec![0.0];
    let mut q = vec![1.0];
    for _ in 1..n {
        let len = p.len().max(q.len()) + 2;
        let mut p_next = vec![0.0; len];
        let mut q_next = vec![0.0; len];
        // P' = -w^2 dP/dw + Q
        for (j, &pj) in p.iter().enumerate() {
            p_next[j + 1] -= j as f64 * pj;
            q_next[j] += pj;
        }
        // Q' = P - w^2 dQ/dw - alpha w Q
        for (j, &qj) in q.iter().enumerate() {
            p_next[j] += qj;
            q_next[j + 1] -= (j as f64 + alpha) * qj;
        }
        p = p_next;
        q = q_next;
    }
    (p, q)
}

pub fn psi(order: FractionalOrder, z: f64) -> Result<f64> {
    PsiProfile::new(order).value(z)
}

pub fn psi_derivative(order: FractionalOrder, ell: usize, z: f64) -> Result<f64> {
    PsiProfile::new(order).derivative(ell, z)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::make_order;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn half_order_closed_form() {
        let k = bessel_k(0.5, 1.0).unwrap();
        assert!(rel(k, (PI / 2.0).sqrt() * (-1f64).exp()) < 1e-15);
        let k = bessel_k(0.5, 4.0).unwrap();
        assert!(rel(k, (PI / 8.0).sqrt() * (-4f64).exp()) < 1e-15);
    }

    #[test]
    fn frozen_reference_values() {
        // 20-digit values from an arbitrary-precision library.
        let cases = [
            (0.25, 0.01, 6.165_741_264_139_240_111_8),
            (0.25, 1.0, 0.430_739_774_448_585_524_66),
            (0.3, 0.5, 0.976_474_124_381_787_917_08),
            (0.7, 3.0, 0.037_302_582_431_968_066_587),
            (0.9, 2.0, 0.134_550_462_165_725_577_62),
            (0.1, 10.0, 1.778_855_150_786_929_561_7e-5),
            (1.0, 1.0, 0.601_907_230_197_234_574_74),
            (1.3, 0.2, 8.736_632_532_664_885_506_2),
            (0.75, 25.0, 3.502_594_731_654_065_521_9e-12),
            (0.999, 1.5, 0.277_245_367_607_904_730_29),
            (1e-3, 0.7, 0.660_520_176_738_569_074_25),
        ];
        for (nu, z, want) in cases {
            let got = bessel_k(nu, z).unwrap();
            assert!(rel(got, want) < 1e-12, "K_{nu}({z}) = {got}, want {want}");
        }
    }

    #[test]
    fn small_argument_limit() {
        let nu = 0.25;
        let z = 0.01;
        let two_term = 0.5 * gamma(nu) * (z / 2.0f64).powf(-nu) + 0.5 * gamma(-nu) * (z / 2.0f64).powf(nu);
        assert!(rel(bessel_k(nu, z).unwrap(), two_term) < 1e-4);
    }

    #[test]
    fn symmetric_in_order_and_matches_reflection_route() {
        for &nu in &[0.1, 0.25, 0.4, 0.6, 0.75, 0.9] {
            for &z in &[0.05, 0.3, 1.0, 1.9] {
                let a = bessel_k(nu, z).unwrap();
                assert_eq!(a, bessel_k(-nu, z).unwrap());
                let b = bessel_k_reflection(nu, z).unwrap();
                assert!(rel(a, b) < 1e-12, "nu={nu} z={z}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn domain_errors() {
        assert!(matches!(bessel_k(0.3, 0.0), Err(Error::Domain(_))));
        assert!(matches!(bessel_k(0.3, -1.0), Err(Error::Domain(_))));
        assert!(matches!(bessel_k(1.6, 1.0), Err(Error::Domain(_))));
        assert!(matches!(bessel_k(0.3, 1e-310), Err(Error::SingularEvaluation(_))));
    }

    #[test]
    fn psi_examples() {
        let o = make_order(0.5).unwrap();
        assert!(rel(psi(o, 1.0).unwrap(), 0.367_879_441_171_442_3) < 1e-14);
        for s in [0.1, 0.5, 0.9] {
            assert_eq!(psi(make_order(s).unwrap(), 0.0).unwrap(), 1.0);
        }
        let o = make_order(0.25).unwrap();
        let p = psi(o, 50.0).unwrap();
        assert!(p > 0.0 && p < 1e-18);
    }

    #[test]
    fn psi_derivative_examples() {
        let o = make_order(0.5).unwrap();
        assert!(rel(psi_derivative(o, 1, 1.0).unwrap(), -(-1f64).exp()) < 1e-14);
        assert!(rel(psi_derivative(o, 3, 2.0).unwrap(), -(-2f64).exp()) < 1e-13);
        assert!(matches!(psi_derivative(o, 13, 1.0), Err(Error::UnsupportedOrder(13))));
        assert!(matches!(psi_derivative(o, 1, 0.0), Err(Error::Domain(_))));
    }

    #[test]
    fn psi_second_derivative_vs_richardson_differences() {
        let o = make_order(0.3).unwrap();
        let p = PsiProfile::new(o);
        let z = 0.7;
        let d1 = |h: f64| (p.derivative(1, z + h).unwrap() - p.derivative(1, z - h).unwrap()) / (2.0 * h);
        let h = 1e-4;
        let fd = (4.0 * d1(h / 2.0) - d1(h)) / 3.0;
        let exact = p.derivative(2, z).unwrap();
        assert!(rel(exact, fd) < 1e-6, "{exact} vs {fd}");
    }

    #[test]
    fn derivative_polynomials_reproduce_exponential_at_half() {
        let o = make_order(0.5).unwrap();
        for ell in 0..=12 {
            let z: f64 = 1.3;
            let want = if ell % 2 == 0 { (-z).exp() } else { -(-z).exp() };
            assert!(rel(psi_derivative(o, ell, z).unwrap(), want) < 1e-12, "ell={ell}");
        }
    }
}
