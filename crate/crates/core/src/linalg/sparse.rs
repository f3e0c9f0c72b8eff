use std::io::Write;

use crate::error::{Error, Result};

/// Symmetric sparse matrix; only the upper triangle (`j >= i`) is stored,
/// row by row, with sorted column indices.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSym {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

/// Accumulates entries (either triangle); duplicates are summed.
#[derive(Debug, Clone)]
pub struct TripletBuilder {
    n: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl TripletBuilder {
    pub fn new(n: usize) -> Self {
        Self { n, entries: Vec::new() }
    }

    pub fn with_capacity(n: usize, cap: usize) -> Self {
        Self { n, entries: Vec::with_capacity(cap) }
    }

    /// Adds `v` at `(i, j)`; an off-diagonal entry is added once for the
    /// symmetric pair.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(i < self.n && j < self.n);
        let (r, c) = if i <= j { (i, j) } else { (j, i) };
        self.entries.push((r, c, v));
    }

    /// Sums duplicates and drops exact zeros.
    pub fn finalize(self) -> SparseSym {
        self.build(true)
    }

    /// Like [`finalize`](Self::finalize) but keeps explicit zeros, so the
    /// pattern depends only on the positions added.
    pub fn finalize_keep_pattern(self) -> SparseSym {
        self.build(false)
    }

    fn build(mut self, drop_zeros: bool) -> SparseSym {
        self.entries.sort_unstable_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut row_ptr = vec![0usize; self.n + 1];
        let mut cols = Vec::with_capacity(self.entries.len());
        let mut vals = Vec::with_capacity(self.entries.len());
        let mut rows = Vec::with_capacity(self.entries.len());
        let mut it = self.entries.into_iter().peekable();
        while let Some((r, c, mut v)) = it.next() {
            while let Some(&(r2, c2, v2)) = it.peek() {
                if r2 == r && c2 == c {
                    v += v2;
                    it.next();
                } else {
                    break;
                }
            }
            if drop_zeros && v == 0.0 {
                continue;
            }
            rows.push(r);
            cols.push(c);
            vals.push(v);
        }
        for &r in &rows {
            row_ptr[r + 1] += 1;
        }
        for i in 0..self.n {
            row_ptr[i + 1] += row_ptr[i];
        }
        SparseSym { n: self.n, row_ptr, cols, vals }
    }
}

impl SparseSym {
    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of stored (upper-triangle) entries.
    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn identity(n: usize) -> Self {
        SparseSym { n, row_ptr: (0..=n).collect(), cols: (0..n).collect(), vals: vec![1.0; n] }
    }

    /// Iterates the stored entries `(i, j, v)` with `i <= j`.
    pub fn upper_entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n).flat_map(move |i| {
            (self.row_ptr[i]..self.row_ptr[i + 1]).map(move |p| (i, self.cols[p], self.vals[p]))
        })
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_indices(&self) -> &[usize] {
        &self.cols
    }

    pub fn values(&self) -> &[f64] {
        &self.vals
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (r, c) = if i <= j { (i, j) } else { (j, i) };
        let row = &self.cols[self.row_ptr[r]..self.row_ptr[r + 1]];
        match row.binary_search(&c) {
            Ok(k) => self.vals[self.row_ptr[r] + k],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.mul_vec_into(x, &mut y);
        y
    }

    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.n);
        y.iter_mut().for_each(|v| *v = 0.0);
        for i in 0..self.n {
            let mut acc = 0.0;
            let xi = x[i];
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                let j = self.cols[p];
                let v = self.vals[p];
                acc += v * x[j];
                if j != i {
                    y[j] += v * xi;
                }
            }
            y[i] += acc;
        }
    }

    /// `x^T A y`.
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        super::dot(x, &self.mul_vec(y))
    }

    /// `alpha A + beta B` on the union of both patterns (zeros kept, so the
    /// pattern does not depend on `alpha`, `beta`).
    pub fn axpby(alpha: f64, a: &SparseSym, beta: f64, b: &SparseSym) -> Result<SparseSym> {
        if a.n != b.n {
            return Err(Error::Parameter(format!("dimension mismatch {} vs {}", a.n, b.n)));
        }
        let n = a.n;
        let mut row_ptr = Vec::with_capacity(n + 1);
        row_ptr.push(0);
        let mut cols = Vec::with_capacity(a.nnz().max(b.nnz()));
        let mut vals = Vec::with_capacity(a.nnz().max(b.nnz()));
        for i in 0..n {
            let (mut p, pe) = (a.row_ptr[i], a.row_ptr[i + 1]);
            let (mut q, qe) = (b.row_ptr[i], b.row_ptr[i + 1]);
            while p < pe || q < qe {
                let ca = if p < pe { a.cols[p] } else { usize::MAX };
                let cb = if q < qe { b.cols[q] } else { usize::MAX };
                if ca == cb {
                    cols.push(ca);
                    vals.push(alpha * a.vals[p] + beta * b.vals[q]);
                    p += 1;
                    q += 1;
                } else if ca < cb {
                    cols.push(ca);
                    vals.push(alpha * a.vals[p]);
                    p += 1;
                } else {
                    cols.push(cb);
                    vals.push(beta * b.vals[q]);
                    q += 1;
                }
            }
            row_ptr.push(cols.len());
        }
        Ok(SparseSym { n, row_ptr, cols, vals })
    }

    pub fn scaled(&self, alpha: f64) -> SparseSym {
        let mut out = self.clone();
        out.vals.iter_mut().for_each(|v| *v *= alpha);
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.vals.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.n]; self.n];
        for (i, j, v) in self.upper_entries() {
            d[i][j] = v;
            d[j][i] = v;
        }
        d
    }

    /// Writes the matrix in Matrix Market coordinate format (symmetric, lower
    /// triangle, 1-based).
    pub fn write_matrix_market(&self, mut w: impl Write) -> std::io::Result<()> {
        writeln!(w, "%%MatrixMarket matrix coordinate real symmetric")?;
        writeln!(w, "{} {} {}", self.n, self.n, self.nnz())?;
        for (i, j, v) in self.upper_entries() {
            writeln!(w, "{} {} {:.17e}", j + 1, i + 1, v)?;
        }
        Ok(())
    }
}
