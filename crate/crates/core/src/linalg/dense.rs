use nalgebra::{Cholesky, DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

/// Dense symmetric matrix, row-major; every write updates both triangles.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseSym {
    n: usize,
    data: Vec<f64>,
}

impl DenseSym {
    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![0.0; n * n] }
    }

    pub fn from_diagonal(d: &[f64]) -> Self {
        let mut m = Self::zeros(d.len());
        for (i, &v) in d.iter().enumerate() {
            m.data[i * m.n + i] = v;
        }
        m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] += v;
        if i != j {
            self.data[j * self.n + i] += v;
        }
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
        self.data[j * self.n + i] = v;
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n).map(|i| (0..self.n).map(|j| self.get(i, j) * x[j]).sum()).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Generalized eigenpairs of `M v = mu S v`; `vectors[i]` is the `i`-th
/// eigenvector, normalized so `v_i^T S v_j = delta_ij`.
#[derive(Debug, Clone)]
pub struct GenEig {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
}

/// Largest size accepted by [`gen_sym_eig`].
pub const DENSE_EIG_LIMIT: usize = 2000;

/// Solves `M v = mu S v` for SPD `S` and symmetric positive semidefinite
/// `M`, eigenvalues ascending.
///
/// A pencil reduced by diagonal scaling and Cholesky resolves eigenvalues
/// only down to about `eps * mu_max`. Graded meshes produce spectra far
/// wider than that, so the spectrum is cut into bands `[w t, t)` with
/// `t = mu_max, w mu_max, ...` and each band is read off the pencil
/// `M v = theta (S + M / t) v`, whose eigenvalues `theta = mu t / (mu + t)`
/// saturate at `t` instead of growing with `mu`.
pub fn gen_sym_eig(m: &DenseSym, s: &DenseSym) -> Result<GenEig> {
    let n = s.n();
    if m.n() != n {
        return Err(Error::Parameter(format!("dimension mismatch {} vs {}", m.n(), n)));
    }
    if n > DENSE_EIG_LIMIT {
        return Err(Error::Resource(format!("dense eigenproblem of size {n} exceeds {DENSE_EIG_LIMIT}")));
    }
    if n == 0 {
        return Ok(GenEig { values: vec![], vectors: vec![] });
    }
    let direct = pencil(m, s)?.ok_or_else(|| Error::IndefiniteMatrix("stiffness matrix is not positive definite".into()))?;
    let top = direct.values[n - 1];
    if !(top > 0.0) {
        return Ok(direct);
    }
    let mut values = vec![0.0; n];
    let mut vectors = vec![Vec::new(); n];
    // Eigenpairs n - taken .. n are final.
    let mut taken = 0;
    let mut band = direct;
    let mut t = f64::INFINITY;
    let mut cut = BAND_WIDTH * top;
    loop {
        let mu: Vec<f64> = band.values.iter().map(|&th| if t.is_finite() { th * t / (t - th) } else { th }).collect();
        let last = mu[0] >= cut;
        let keep = if last { n } else { mu.iter().filter(|&&x| x >= cut).count().max(taken) };
        for i in n - keep..n - taken {
            let scale = if t.is_finite() { 1.0 / (1.0 - band.values[i] / t).sqrt() } else { 1.0 };
            values[i] = mu[i].max(0.0);
            vectors[i] = band.vectors[i].iter().map(|x| x * scale).collect();
        }
        taken = keep;
        if last || taken == n {
            break;
        }
        t = cut;
        cut *= BAND_WIDTH;
        let mut shifted = s.clone();
        for i in 0..n {
            for j in i..n {
                shifted.set(i, j, s.get(i, j) + m.get(i, j) / t);
            }
        }
        band = pencil(m, &shifted)?.ok_or_else(|| Error::IndefiniteMatrix("shifted pencil is not positive definite".into()))?;
    }
    Ok(GenEig { values, vectors })
}

/// Ratio between consecutive band edges in [`gen_sym_eig`].
const BAND_WIDTH: f64 = 1e-4;

/// `a v = theta b v` with `v^T b v = 1`, ascending; `None` if `b` is
/// not positive definite.
fn pencil(a: &DenseSym, b: &DenseSym) -> Result<Option<GenEig>> {
    let n = b.n();
    let mut d = Vec::with_capacity(n);
    for i in 0..n {
        let bii = b.get(i, i);
        if !(bii > 0.0) {
            return Ok(None);
        }
        d.push(1.0 / bii.sqrt());
    }
    let bs = DMatrix::from_fn(n, n, |i, j| d[i] * b.get(i, j) * d[j]);
    let as_ = DMatrix::from_fn(n, n, |i, j| d[i] * a.get(i, j) * d[j]);
    let Some(chol) = Cholesky::new(bs) else {
        return Ok(None);
    };
    let l = chol.l();
    // C = L^{-1} A L^{-T}
    let x = l.solve_lower_triangular(&as_).expect("nonsingular triangular factor");
    let c = l.solve_lower_triangular(&x.transpose()).expect("nonsingular triangular factor");
    let c = (&c + c.transpose()) * 0.5;
    let eig = SymmetricEigen::new(c);
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&p, &q| eig.eigenvalues[p].total_cmp(&eig.eigenvalues[q]));
    let lt = l.transpose();
    let mut values = Vec::with_capacity(n);
    let mut vectors = Vec::with_capacity(n);
    for &k in &idx {
        let w = eig.eigenvectors.column(k).into_owned();
        let y = lt.solve_upper_triangular(&w).expect("nonsingular triangular factor");
        values.push(eig.eigenvalues[k]);
        vectors.push((0..n).map(|i| d[i] * y[i]).collect());
    }
    Ok(Some(GenEig { values, vectors }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn diagonal_examples() {
        let m = DenseSym::from_diagonal(&[1.0, 2.0]);
        let s = DenseSym::from_diagonal(&[1.0, 1.0]);
        let e = gen_sym_eig(&m, &s).unwrap();
        assert!((e.values[0] - 1.0).abs() < 1e-15 && (e.values[1] - 2.0).abs() < 1e-15);
        assert!((e.vectors[0][0].abs() - 1.0).abs() < 1e-15 && e.vectors[0][1].abs() < 1e-15);
        let e = gen_sym_eig(&DenseSym::from_diagonal(&[1.0]), &DenseSym::from_diagonal(&[4.0])).unwrap();
        assert!((e.values[0] - 0.25).abs() < 1e-15);
        assert!((e.vectors[0][0].abs() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn not_spd_rejected() {
        let mut s = DenseSym::zeros(2);
        s.set(0, 0, 1.0);
        s.set(1, 1, 1.0);
        s.set(0, 1, 2.0);
        assert!(matches!(gen_sym_eig(&DenseSym::zeros(2), &s), Err(Error::IndefiniteMatrix(_))));
    }

    #[test]
    fn random_reconstruction() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 40;
        let mut s = DenseSym::zeros(n);
        let mut m = DenseSym::zeros(n);
        for i in 0..n {
            for j in i..n {
                s.add(i, j, rng.gen_range(-0.1..0.1));
                m.add(i, j, rng.gen_range(-0.1..0.1));
            }
            s.add(i, i, 5.0);
            m.add(i, i, 5.0);
        }
        let e = gen_sym_eig(&m, &s).unwrap();
        for i in 0..n {
            let svi = s.mul_vec(&e.vectors[i]);
            let mvi = m.mul_vec(&e.vectors[i]);
            for j in 0..n {
                let vsv: f64 = e.vectors[j].iter().zip(&svi).map(|(a, b)| a * b).sum();
                let vmv: f64 = e.vectors[j].iter().zip(&mvi).map(|(a, b)| a * b).sum();
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((vsv - want).abs() < 1e-9);
                assert!((vmv - want * e.values[i]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn graded_spectrum_keeps_small_eigenvalues() {
        // Diagonal pencil spanning 24 decades, mixed by a fixed rotation.
        let n = 13;
        let exact: Vec<f64> = (0..n).map(|i| 10f64.powi(2 * i as i32 - 20)).collect();
        let (c, sn) = (0.8, 0.6);
        let mut m = DenseSym::zeros(n);
        let mut s = DenseSym::zeros(n);
        // Rotate within disjoint pairs.
        for i in 0..n {
            s.set(i, i, 1.0);
            m.set(i, i, exact[i]);
        }
        for i in (0..n - 1).step_by(2) {
            let (a, b) = (exact[i], exact[i + 1]);
            m.set(i, i, c * c * a + sn * sn * b);
            m.set(i + 1, i + 1, sn * sn * a + c * c * b);
            m.set(i, i + 1, c * sn * (b - a));
        }
        let e = gen_sym_eig(&m, &s).unwrap();
        for i in 0..n {
            assert!((e.values[i] / exact[i] - 1.0).abs() < 1e-8, "{i}: {} vs {}", e.values[i], exact[i]);
        }
    }
}
