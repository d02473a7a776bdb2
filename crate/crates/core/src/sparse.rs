//! Compressed sparse row storage and a factorisation handle backed by faer.

use std::sync::Arc;

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::{Llt, Lu};
use faer::sparse::{SparseColMat, Triplet};
use faer::{Mat, Side};
use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix<T> {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<T>,
}

impl<T: Scalar> CsrMatrix<T> {
    /// Builds from (row, col, value) entries; duplicates are summed.
    pub fn from_triplets(nrows: usize, ncols: usize, mut trips: Vec<(usize, usize, T)>) -> Self {
        trips.sort_unstable_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut indptr = vec![0usize; nrows + 1];
        let mut indices = Vec::with_capacity(trips.len());
        let mut values: Vec<T> = Vec::with_capacity(trips.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in trips {
            assert!(i < nrows && j < ncols, "triplet ({i},{j}) outside {nrows}x{ncols}");
            if last == Some((i, j)) {
                let k = values.len() - 1;
                values[k] += v;
            } else {
                indices.push(j);
                values.push(v);
                indptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..nrows {
            indptr[i + 1] += indptr[i];
        }
        CsrMatrix { nrows, ncols, indptr, indices, values }
    }

    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self::from_triplets(nrows, ncols, Vec::new())
    }

    pub fn identity(n: usize) -> Self {
        Self::diagonal(&vec![T::one(); n])
    }

    pub fn diagonal(d: &[T]) -> Self {
        let n = d.len();
        Self::from_triplets(n, n, d.iter().enumerate().map(|(i, &v)| (i, i, v)).collect())
    }

    pub fn from_dense(m: &DMatrix<T>) -> Self {
        let mut t = Vec::new();
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                let v = m[(i, j)];
                if v != T::zero() {
                    t.push((i, j, v));
                }
            }
        }
        Self::from_triplets(m.nrows(), m.ncols(), t)
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

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, T)> + '_ {
        let r = self.indptr[i]..self.indptr[i + 1];
        self.indices[r.clone()].iter().copied().zip(self.values[r].iter().copied())
    }

    pub fn triplets(&self) -> Vec<(usize, usize, T)> {
        let mut out = Vec::with_capacity(self.nnz());
        for i in 0..self.nrows {
            for (j, v) in self.row(i) {
                out.push((i, j, v));
            }
        }
        out
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.row(i).filter(|&(c, _)| c == j).map(|(_, v)| v).fold(T::zero(), |a, b| a + b)
    }

    pub fn mul_vec(&self, x: &DVector<T>) -> DVector<T> {
        assert_eq!(x.len(), self.ncols, "sparse mul: vector length");
        DVector::from_fn(self.nrows, |i, _| {
            let mut s = T::zero();
            for k in self.indptr[i]..self.indptr[i + 1] {
                s += self.values[k] * x[self.indices[k]];
            }
            s
        })
    }

    /// Computes Āᵀ x.
    pub fn adjoint_mul_vec(&self, x: &DVector<T>) -> DVector<T> {
        assert_eq!(x.len(), self.nrows, "sparse adjoint mul: vector length");
        let mut y = DVector::zeros(self.ncols);
        for i in 0..self.nrows {
            let xi = x[i];
            for k in self.indptr[i]..self.indptr[i + 1] {
                y[self.indices[k]] += self.values[k].cj() * xi;
            }
        }
        y
    }

    pub fn transpose(&self) -> Self {
        let t = self.triplets().into_iter().map(|(i, j, v)| (j, i, v)).collect();
        Self::from_triplets(self.ncols, self.nrows, t)
    }

    pub fn conj_transpose(&self) -> Self {
        let t = self.triplets().into_iter().map(|(i, j, v)| (j, i, v.cj())).collect();
        Self::from_triplets(self.ncols, self.nrows, t)
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        CsrMatrix {
            nrows: self.nrows,
            ncols: self.ncols,
            indptr: self.indptr.clone(),
            indices: self.indices.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn scale(&self, s: T) -> Self {
        self.map(|v| v * s)
    }

    /// diag(d) · A
    pub fn scale_rows(&self, d: &[T]) -> Self {
        assert_eq!(d.len(), self.nrows);
        let mut out = self.clone();
        for i in 0..self.nrows {
            for k in self.indptr[i]..self.indptr[i + 1] {
                out.values[k] = d[i] * self.values[k];
            }
        }
        out
    }

    /// A · diag(d)
    pub fn scale_cols(&self, d: &[T]) -> Self {
        assert_eq!(d.len(), self.ncols);
        let mut out = self.clone();
        for k in 0..self.values.len() {
            out.values[k] = self.values[k] * d[self.indices[k]];
        }
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        self.add_scaled(T::one(), other)
    }

    /// self + s · other
    pub fn add_scaled(&self, s: T, other: &Self) -> Self {
        assert_eq!((self.nrows, self.ncols), (other.nrows, other.ncols), "sparse add shapes");
        let mut t = self.triplets();
        t.extend(other.triplets().into_iter().map(|(i, j, v)| (i, j, s * v)));
        Self::from_triplets(self.nrows, self.ncols, t)
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.ncols, other.nrows, "sparse matmul shapes");
        let n = other.ncols;
        let mut acc = vec![T::zero(); n];
        let mut mark = vec![usize::MAX; n];
        let mut indptr = vec![0usize; self.nrows + 1];
        let mut indices = Vec::new();
        let mut values = Vec::new();
        for i in 0..self.nrows {
            let start = indices.len();
            for (k, a) in self.row(i) {
                for (j, b) in other.row(k) {
                    if mark[j] != i {
                        mark[j] = i;
                        acc[j] = T::zero();
                        indices.push(j);
                    }
                    acc[j] += a * b;
                }
            }
            indices[start..].sort_unstable();
            for &j in &indices[start..] {
                values.push(acc[j]);
            }
            indptr[i + 1] = indices.len();
        }
        CsrMatrix { nrows: self.nrows, ncols: n, indptr, indices, values }
    }

    pub fn to_dense(&self) -> DMatrix<T> {
        let mut m = DMatrix::zeros(self.nrows, self.ncols);
        for i in 0..self.nrows {
            for (j, v) in self.row(i) {
                m[(i, j)] += v;
            }
        }
        m
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs_val()))
    }

    /// Keeps the listed columns, in order.
    pub fn select_cols(&self, cols: &[usize]) -> Self {
        let mut newidx = vec![usize::MAX; self.ncols];
        for (k, &c) in cols.iter().enumerate() {
            newidx[c] = k;
        }
        let t = self
            .triplets()
            .into_iter()
            .filter(|&(_, j, _)| newidx[j] != usize::MAX)
            .map(|(i, j, v)| (i, newidx[j], v))
            .collect();
        Self::from_triplets(self.nrows, cols.len(), t)
    }

    pub fn select_rows(&self, rows: &[usize]) -> Self {
        let mut t = Vec::new();
        for (k, &r) in rows.iter().enumerate() {
            for (j, v) in self.row(r) {
                t.push((k, j, v));
            }
        }
        Self::from_triplets(rows.len(), self.ncols, t)
    }

    /// Assembles a block matrix; `blocks` holds (block row, block col, matrix).
    pub fn block(row_sizes: &[usize], col_sizes: &[usize], blocks: &[(usize, usize, &Self)]) -> Self {
        let roff: Vec<usize> = offsets(row_sizes);
        let coff: Vec<usize> = offsets(col_sizes);
        let mut t = Vec::new();
        for &(bi, bj, m) in blocks {
            assert_eq!(m.nrows, row_sizes[bi], "block ({bi},{bj}) rows");
            assert_eq!(m.ncols, col_sizes[bj], "block ({bi},{bj}) cols");
            for (i, j, v) in m.triplets() {
                t.push((roff[bi] + i, coff[bj] + j, v));
            }
        }
        Self::from_triplets(*roff.last().unwrap(), *coff.last().unwrap(), t)
    }

    fn to_faer(&self) -> Result<SparseColMat<usize, T>> {
        let t: Vec<Triplet<usize, usize, T>> =
            self.triplets().into_iter().map(|(i, j, v)| Triplet::new(i, j, v)).collect();
        SparseColMat::try_new_from_triplets(self.nrows, self.ncols, &t)
            .map_err(|e| Error::Internal(format!("sparse conversion: {e:?}")))
    }

    pub fn lu(&self) -> Result<SparseLu<T>> {
        SparseLu::new(Arc::new(self.clone()))
    }
}

pub(crate) fn offsets(sizes: &[usize]) -> Vec<usize> {
    let mut o = vec![0];
    for s in sizes {
        o.push(o.last().unwrap() + s);
    }
    o
}

fn to_col<T: Scalar>(b: &DVector<T>) -> Mat<T> {
    Mat::from_fn(b.len(), 1, |i, _| b[i])
}

fn from_col<T: Scalar>(m: &Mat<T>) -> DVector<T> {
    DVector::from_fn(m.nrows(), |i, _| m[(i, 0)])
}

enum Factor<T> {
    Lu(Lu<usize, T>),
    Llt(Llt<usize, T>),
}

/// Immutable direct factorisation with one step of iterative refinement per solve.
pub struct SparseLu<T: Scalar> {
    a: Arc<CsrMatrix<T>>,
    factor: Factor<T>,
}

impl<T: Scalar> SparseLu<T> {
    pub fn new(a: Arc<CsrMatrix<T>>) -> Result<Self> {
        if a.nrows != a.ncols {
            return Err(Error::Shape(format!("LU of {}x{} matrix", a.nrows, a.ncols)));
        }
        let lu = a
            .to_faer()?
            .sp_lu()
            .map_err(|e| Error::SolverDiverged(format!("sparse LU failed: {e:?}")))?;
        let s = SparseLu { a, factor: Factor::Lu(lu) };
        s.check_finite()?;
        Ok(s)
    }

    /// Cholesky factorisation of a Hermitian positive-definite matrix.
    pub fn cholesky(a: Arc<CsrMatrix<T>>) -> Result<Self> {
        let llt = a
            .to_faer()?
            .sp_cholesky(Side::Lower)
            .map_err(|e| Error::Coercivity(format!("matrix is not positive definite: {e:?}")))?;
        Ok(SparseLu { a, factor: Factor::Llt(llt) })
    }

    fn check_finite(&self) -> Result<()> {
        let n = self.dim();
        if n == 0 {
            return Ok(());
        }
        let probe = DVector::from_fn(n, |i, _| T::of(1.0 + (i % 7) as f64));
        let x = self.raw_solve(&probe, false);
        if x.iter().all(|v| v.to_c64().is_finite()) {
            Ok(())
        } else {
            Err(Error::SolverDiverged("sparse factorisation is singular".into()))
        }
    }

    pub fn dim(&self) -> usize {
        self.a.nrows
    }

    pub fn matrix(&self) -> &CsrMatrix<T> {
        &self.a
    }

    fn raw_solve(&self, b: &DVector<T>, adjoint: bool) -> DVector<T> {
        let mut m = to_col(b);
        match (&self.factor, adjoint) {
            (Factor::Lu(f), false) => f.solve_in_place(m.as_mut()),
            (Factor::Lu(f), true) => f.solve_adjoint_in_place(m.as_mut()),
            (Factor::Llt(f), _) => f.solve_in_place(m.as_mut()),
        }
        from_col(&m)
    }

    /// Solves A x = b.
    pub fn solve(&self, b: &DVector<T>) -> DVector<T> {
        let mut x = self.raw_solve(b, false);
        let r = b - self.a.mul_vec(&x);
        x += self.raw_solve(&r, false);
        x
    }

    /// Solves Āᵀ x = b.
    pub fn solve_adjoint(&self, b: &DVector<T>) -> DVector<T> {
        let mut x = self.raw_solve(b, true);
        let r = b - self.a.adjoint_mul_vec(&x);
        x += self.raw_solve(&r, true);
        x
    }

    /// Relative residual ‖b − A x‖ / ‖b‖.
    pub fn residual(&self, x: &DVector<T>, b: &DVector<T>) -> f64 {
        let nb = b.norm();
        let r = (b - self.a.mul_vec(x)).norm();
        if nb == 0.0 {
            r
        } else {
            r / nb
        }
    }
}
