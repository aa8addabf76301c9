//! Compressed-sparse-row matrices and the iterative solver used by every
//! Newton step: right-preconditioned restarted GMRES with ILU(0).

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;

#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

/// Accumulates `(row, col, value)` entries; duplicates are summed.
#[derive(Debug, Clone, Default)]
pub struct Triplets {
    nrows: usize,
    ncols: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl Triplets {
    pub fn new(nrows: usize, ncols: usize) -> Self {
        Triplets {
            nrows,
            ncols,
            entries: Vec::new(),
        }
    }

    pub fn with_capacity(nrows: usize, ncols: usize, cap: usize) -> Self {
        Triplets {
            nrows,
            ncols,
            entries: Vec::with_capacity(cap),
        }
    }

    #[inline]
    pub fn push(&mut self, row: usize, col: usize, value: f64) {
        debug_assert!(row < self.nrows && col < self.ncols);
        if value != 0.0 {
            self.entries.push((row, col, value));
        }
    }

    /// Adds `scale · block` with its rows and columns relabelled.
    pub fn push_matrix(
        &mut self,
        block: &CsrMatrix,
        scale: f64,
        row_map: impl Fn(usize) -> usize,
        col_map: impl Fn(usize) -> usize,
    ) {
        for r in 0..block.nrows {
            let rr = row_map(r);
            for k in block.indptr[r]..block.indptr[r + 1] {
                self.push(rr, col_map(block.indices[k]), scale * block.values[k]);
            }
        }
    }

    pub fn build(mut self) -> CsrMatrix {
        self.entries
            .sort_unstable_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut indptr = vec![0usize; self.nrows + 1];
        let mut indices = Vec::with_capacity(self.entries.len());
        let mut values: Vec<f64> = Vec::with_capacity(self.entries.len());
        let mut last: Option<(usize, usize)> = None;
        for &(r, c, v) in &self.entries {
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                indices.push(c);
                values.push(v);
                indptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for r in 0..self.nrows {
            indptr[r + 1] += indptr[r];
        }
        CsrMatrix {
            nrows: self.nrows,
            ncols: self.ncols,
            indptr,
            indices,
            values,
        }
    }
}

impl CsrMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Triplets::new(nrows, ncols).build()
    }

    pub fn identity(n: usize) -> Self {
        Self::diagonal(&vec![1.0; n])
    }

    pub fn diagonal(d: &[f64]) -> Self {
        let mut t = Triplets::with_capacity(d.len(), d.len(), d.len());
        for (i, &v) in d.iter().enumerate() {
            t.push(i, i, v);
        }
        t.build()
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        (self.indptr[r]..self.indptr[r + 1]).map(move |k| (self.indices[k], self.values[k]))
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.row(r).find(|&(j, _)| j == c).map_or(0.0, |(_, v)| v)
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.nrows];
        self.matvec_into(x, &mut y);
        y
    }

    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.ncols);
        assert_eq!(y.len(), self.nrows);
        for (r, yr) in y.iter_mut().enumerate() {
            let mut s = 0.0;
            for k in self.indptr[r]..self.indptr[r + 1] {
                s += self.values[k] * x[self.indices[k]];
            }
            *yr = s;
        }
    }

    pub fn transpose(&self) -> CsrMatrix {
        let mut t = Triplets::with_capacity(self.ncols, self.nrows, self.nnz());
        for r in 0..self.nrows {
            for (c, v) in self.row(r) {
                t.push(c, r, v);
            }
        }
        t.build()
    }

    pub fn scaled(&self, s: f64) -> CsrMatrix {
        let mut m = self.clone();
        m.values.iter_mut().for_each(|v| *v *= s);
        m
    }

    /// `a·self + b·other`.
    pub fn add(&self, other: &CsrMatrix, a: f64, b: f64) -> CsrMatrix {
        assert_eq!((self.nrows, self.ncols), (other.nrows, other.ncols));
        let mut t = Triplets::with_capacity(self.nrows, self.ncols, self.nnz() + other.nnz());
        t.push_matrix(self, a, |r| r, |c| c);
        t.push_matrix(other, b, |r| r, |c| c);
        t.build()
    }

    /// Sparse product `self · other` (row-wise Gustavson accumulation).
    pub fn mul(&self, other: &CsrMatrix) -> CsrMatrix {
        assert_eq!(self.ncols, other.nrows);
        let mut acc = vec![0.0; other.ncols];
        let mut mark = vec![usize::MAX; other.ncols];
        let mut cols: Vec<usize> = Vec::new();
        let mut indptr = Vec::with_capacity(self.nrows + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        indptr.push(0);
        for r in 0..self.nrows {
            cols.clear();
            for (k, a) in self.row(r) {
                for (c, b) in other.row(k) {
                    if mark[c] != r {
                        mark[c] = r;
                        acc[c] = 0.0;
                        cols.push(c);
                    }
                    acc[c] += a * b;
                }
            }
            cols.sort_unstable();
            for &c in &cols {
                indices.push(c);
                values.push(acc[c]);
            }
            indptr.push(indices.len());
        }
        CsrMatrix {
            nrows: self.nrows,
            ncols: other.ncols,
            indptr,
            indices,
            values,
        }
    }

    /// Row scaling `diag(d) · self`.
    pub fn scale_rows(&self, d: &[f64]) -> CsrMatrix {
        let mut m = self.clone();
        for r in 0..m.nrows {
            for k in m.indptr[r]..m.indptr[r + 1] {
                m.values[k] *= d[r];
            }
        }
        m
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.ncols]; self.nrows];
        for (r, row) in d.iter_mut().enumerate() {
            for (c, v) in self.row(r) {
                row[c] += v;
            }
        }
        d
    }
}

/// Incomplete LU factorization with zero fill, stored in the sparsity of A.
pub struct Ilu0 {
    lu: CsrMatrix,
    diag: Vec<usize>,
}

impl Ilu0 {
    pub fn new(a: &CsrMatrix) -> Result<Self> {
        assert_eq!(a.nrows, a.ncols);
        let n = a.nrows;
        let mut lu = a.clone();
        let mut diag = vec![usize::MAX; n];
        for (r, d) in diag.iter_mut().enumerate() {
            for k in lu.indptr[r]..lu.indptr[r + 1] {
                if lu.indices[k] == r {
                    *d = k;
                }
            }
            if *d == usize::MAX {
                return Err(Error::invalid("ILU(0): structurally zero diagonal"));
            }
        }
        let mut pos = vec![usize::MAX; n];
        for i in 0..n {
            for k in lu.indptr[i]..lu.indptr[i + 1] {
                pos[lu.indices[k]] = k;
            }
            for k in lu.indptr[i]..lu.indptr[i + 1] {
                let j = lu.indices[k];
                if j >= i {
                    break;
                }
                let pivot = lu.values[diag[j]];
                let lij = lu.values[k] / pivot;
                lu.values[k] = lij;
                for kk in (diag[j] + 1)..lu.indptr[j + 1] {
                    let c = lu.indices[kk];
                    let p = pos[c];
                    if p != usize::MAX {
                        lu.values[p] -= lij * lu.values[kk];
                    }
                }
            }
            for k in lu.indptr[i]..lu.indptr[i + 1] {
                pos[lu.indices[k]] = usize::MAX;
            }
            let d = lu.values[diag[i]];
            if d == 0.0 || !d.is_finite() {
                return Err(Error::invalid("ILU(0): zero pivot"));
            }
        }
        Ok(Ilu0 { lu, diag })
    }

    pub fn solve_in_place(&self, x: &mut [f64]) {
        let lu = &self.lu;
        let n = lu.nrows;
        for i in 0..n {
            let mut s = x[i];
            for k in lu.indptr[i]..self.diag[i] {
                s -= lu.values[k] * x[lu.indices[k]];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for k in (self.diag[i] + 1)..lu.indptr[i + 1] {
                s -= lu.values[k] * x[lu.indices[k]];
            }
            x[i] = s / lu.values[self.diag[i]];
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct GmresOptions {
    pub restart: usize,
    pub max_iterations: usize,
    pub rtol: f64,
    pub atol: f64,
}

impl Default for GmresOptions {
    fn default() -> Self {
        GmresOptions {
            restart: 60,
            max_iterations: 2000,
            rtol: 1e-12,
            atol: 1e-300,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SolveStats {
    pub iterations: usize,
    pub relative_residual: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm2(a: &[f64]) -> f64 {
    math::sqrt(dot(a, a))
}

/// Solves `A x = b` with ILU(0)-right-preconditioned GMRES(m).
pub fn solve(a: &CsrMatrix, b: &[f64], opts: &GmresOptions) -> Result<(Vec<f64>, SolveStats)> {
    let n = a.nrows;
    let bnorm = norm2(b);
    let mut x = vec![0.0; n];
    if bnorm == 0.0 {
        return Ok((
            x,
            SolveStats {
                iterations: 0,
                relative_residual: 0.0,
            },
        ));
    }
    let ilu = Ilu0::new(a)?;
    let target = (opts.rtol * bnorm).max(opts.atol);
    let m = opts.restart.max(1);
    let mut total = 0usize;
    let mut r = vec![0.0; n];
    let mut w = vec![0.0; n];
    let mut z = vec![0.0; n];
    let mut best_rel = f64::INFINITY;
    loop {
        a.matvec_into(&x, &mut r);
        for i in 0..n {
            r[i] = b[i] - r[i];
        }
        let beta = norm2(&r);
        best_rel = best_rel.min(beta / bnorm);
        if beta <= target {
            return Ok((
                x,
                SolveStats {
                    iterations: total,
                    relative_residual: beta / bnorm,
                },
            ));
        }
        if total >= opts.max_iterations {
            return Err(Error::LinearSolve {
                residual: beta / bnorm,
                iterations: total,
            });
        }
        let mut basis: Vec<Vec<f64>> = Vec::with_capacity(m + 1);
        basis.push(r.iter().map(|v| v / beta).collect());
        let mut h = vec![vec![0.0; m]; m + 1];
        let mut cs = vec![0.0; m];
        let mut sn = vec![0.0; m];
        let mut g = vec![0.0; m + 1];
        g[0] = beta;
        let mut k_used = 0;
        for k in 0..m {
            z.copy_from_slice(&basis[k]);
            ilu.solve_in_place(&mut z);
            a.matvec_into(&z, &mut w);
            for j in 0..=k {
                let hjk = dot(&w, &basis[j]);
                h[j][k] = hjk;
                for (wi, bi) in w.iter_mut().zip(&basis[j]) {
                    *wi -= hjk * bi;
                }
            }
            let hn = norm2(&w);
            h[k + 1][k] = hn;
            for j in 0..k {
                let t = cs[j] * h[j][k] + sn[j] * h[j + 1][k];
                h[j + 1][k] = -sn[j] * h[j][k] + cs[j] * h[j + 1][k];
                h[j][k] = t;
            }
            let denom = math::sqrt(h[k][k] * h[k][k] + h[k + 1][k] * h[k + 1][k]);
            if denom == 0.0 {
                k_used = k;
                break;
            }
            cs[k] = h[k][k] / denom;
            sn[k] = h[k + 1][k] / denom;
            h[k][k] = denom;
            h[k + 1][k] = 0.0;
            g[k + 1] = -sn[k] * g[k];
            g[k] *= cs[k];
            total += 1;
            k_used = k + 1;
            if math::abs(g[k + 1]) <= target || hn == 0.0 || total >= opts.max_iterations {
                break;
            }
            basis.push(w.iter().map(|v| v / hn).collect());
        }
        // back substitution for the Krylov coefficients
        let mut y = vec![0.0; k_used];
        for i in (0..k_used).rev() {
            let mut s = g[i];
            for j in (i + 1)..k_used {
                s -= h[i][j] * y[j];
            }
            y[i] = s / h[i][i];
        }
        let mut update = vec![0.0; n];
        for (j, yj) in y.iter().enumerate() {
            for (u, bj) in update.iter_mut().zip(&basis[j]) {
                *u += yj * bj;
            }
        }
        ilu.solve_in_place(&mut update);
        for (xi, ui) in x.iter_mut().zip(&update) {
            *xi += ui;
        }
        if k_used == 0 {
            return Err(Error::LinearSolve {
                residual: best_rel,
                iterations: total,
            });
        }
    }
}

/// Dense Gaussian elimination with partial pivoting for the small local
/// systems (8×8 conjugate solves, 9×9 and 10×10 blocks). `a` is row-major n×n.
pub fn solve_dense(n: usize, a: &mut [f64], b: &mut [f64]) -> Result<()> {
    assert_eq!(a.len(), n * n);
    assert_eq!(b.len(), n);
    let scale = a.iter().fold(0.0f64, |m, v| m.max(math::abs(*v)));
    for col in 0..n {
        let mut piv = col;
        let mut best = math::abs(a[col * n + col]);
        for r in (col + 1)..n {
            let v = math::abs(a[r * n + col]);
            if v > best {
                best = v;
                piv = r;
            }
        }
        if !(best > 1e-300 && best > 1e-15 * scale) {
            return Err(Error::SingularMatrix { det: 0.0 });
        }
        if piv != col {
            for c in 0..n {
                a.swap(col * n + c, piv * n + c);
            }
            b.swap(col, piv);
        }
        let d = a[col * n + col];
        for r in (col + 1)..n {
            let f = a[r * n + col] / d;
            if f != 0.0 {
                for c in col..n {
                    a[r * n + c] -= f * a[col * n + c];
                }
                b[r] -= f * b[col];
            }
        }
    }
    for r in (0..n).rev() {
        let mut s = b[r];
        for c in (r + 1)..n {
            s -= a[r * n + c] * b[c];
        }
        b[r] = s / a[r * n + r];
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplace_1d(n: usize, shift: f64) -> CsrMatrix {
        let mut t = Triplets::new(n, n);
        for i in 0..n {
            t.push(i, i, 2.0 + shift);
            t.push(i, (i + 1) % n, -1.0);
            t.push(i, (i + n - 1) % n, -1.0);
        }
        t.build()
    }

    #[test]
    fn duplicates_are_summed() {
        let mut t = Triplets::new(2, 2);
        t.push(0, 1, 1.0);
        t.push(0, 1, 2.5);
        t.push(1, 0, -1.0);
        let m = t.build();
        assert_eq!(m.get(0, 1), 3.5);
        assert_eq!(m.nnz(), 2);
        assert_eq!(m.transpose().get(1, 0), 3.5);
    }

    #[test]
    fn product_matches_dense() {
        let a = laplace_1d(6, 0.3);
        let b = a.transpose().scale_rows(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let c = a.mul(&b).to_dense();
        let (ad, bd) = (a.to_dense(), b.to_dense());
        for i in 0..6 {
            for j in 0..6 {
                let s: f64 = (0..6).map(|k| ad[i][k] * bd[k][j]).sum();
                assert!((c[i][j] - s).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn gmres_solves_nonsymmetric_system() {
        let n = 200;
        let mut t = Triplets::new(n, n);
        for i in 0..n {
            t.push(i, i, 4.0);
            t.push(i, (i + 1) % n, -1.5);
            t.push(i, (i + n - 1) % n, -0.5);
            t.push(i, (i + 7) % n, 0.25);
        }
        let a = t.build();
        let x_true: Vec<f64> = (0..n).map(|i| ((i * 37) % 11) as f64 - 5.0).collect();
        let b = a.matvec(&x_true);
        let (x, stats) = solve(&a, &b, &GmresOptions::default()).unwrap();
        assert!(stats.relative_residual <= 1e-12);
        for (u, v) in x.iter().zip(&x_true) {
            assert!((u - v).abs() < 1e-9);
        }
    }

    #[test]
    fn dense_solver() {
        let mut a = [0.0, 2.0, 1.0, 1.0, 1.0, 0.0, 3.0, 0.0, 1.0];
        let mut b = [3.0, 2.0, 4.0];
        solve_dense(3, &mut a, &mut b).unwrap();
        for (u, v) in b.iter().zip([1.0, 1.0, 1.0]) {
            assert!((u - v).abs() < 1e-14);
        }
    }
}
