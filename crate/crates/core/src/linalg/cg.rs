use super::{dot, norm2, SparseSym};
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct CgOutcome {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub relative_residual: f64,
}

/// Jacobi-preconditioned conjugate gradients from a zero start.
pub fn pcg_jacobi(a: &SparseSym, b: &[f64], tol: f64, max_iter: usize) -> Result<CgOutcome> {
    let n = a.n();
    let nb = norm2(b);
    let mut x = vec![0.0; n];
    if nb == 0.0 {
        return Ok(CgOutcome { x, iterations: 0, relative_residual: 0.0 });
    }
    let dinv: Vec<f64> = a
        .diagonal()
        .into_iter()
        .map(|d| if d > 0.0 { Ok(1.0 / d) } else { Err(Error::IndefiniteMatrix(format!("diagonal entry {d}"))) })
        .collect::<Result<_>>()?;
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&dinv).map(|(ri, di)| ri * di).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    let mut best = f64::INFINITY;
    let mut since_best = 0;
    for it in 1..=max_iter {
        a.mul_vec_into(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::IndefiniteMatrix(format!("p^T A p = {pap:e} in CG step {it}")));
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rel = norm2(&r) / nb;
        if rel <= tol {
            return Ok(CgOutcome { x, iterations: it, relative_residual: rel });
        }
        if rel < 0.5 * best {
            best = rel;
            since_best = 0;
        } else {
            since_best += 1;
            if since_best > 2000 + n / 10 {
                break;
            }
        }
        for i in 0..n {
            z[i] = r[i] * dinv[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    let rel = norm2(&r) / nb;
    Err(Error::IndefiniteMatrix(format!("CG stagnated at relative residual {rel:e}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::tests::random_spd;

    #[test]
    fn converges_on_random_spd() {
        let a = random_spd(300, 3);
        let b: Vec<f64> = (0..300).map(|i| (i as f64 * 0.1).cos()).collect();
        let out = pcg_jacobi(&a, &b, 1e-11, 10_000).unwrap();
        let r: Vec<f64> = a.mul_vec(&out.x).iter().zip(&b).map(|(p, q)| p - q).collect();
        assert!(norm2(&r) <= 1e-10 * norm2(&b));
    }
}
