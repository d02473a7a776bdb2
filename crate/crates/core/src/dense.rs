//! Dense decompositions (SVD, Hermitian and general eigenproblems) delegated to faer.

use faer::{Mat, MatRef, Side};
use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

fn to_faer<T: Scalar>(m: &DMatrix<T>) -> Mat<T> {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

fn from_faer<T: Scalar>(m: MatRef<'_, T>) -> DMatrix<T> {
    DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

/// Full SVD `m = U diag(s) Vᴴ` with square U, V; singular values nonincreasing.
pub fn svd_full<T: Scalar>(m: &DMatrix<T>) -> Result<(DMatrix<T>, Vec<f64>, DMatrix<T>)> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Ok((
            DMatrix::identity(m.nrows(), m.nrows()),
            Vec::new(),
            DMatrix::identity(m.ncols(), m.ncols()),
        ));
    }
    let f = to_faer(m);
    let svd = f.svd().map_err(|e| Error::SolverDiverged(format!("svd: {e:?}")))?;
    let s = svd.S().column_vector().iter().map(|x| x.re()).collect();
    Ok((from_faer(svd.U()), s, from_faer(svd.V())))
}

pub fn singular_values<T: Scalar>(m: &DMatrix<T>) -> Result<Vec<f64>> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Ok(Vec::new());
    }
    to_faer(m).singular_values().map_err(|e| Error::SolverDiverged(format!("svd: {e:?}")))
}

/// Eigenvalues (nondecreasing) and eigenvectors of a Hermitian matrix.
pub fn hermitian_eigen<T: Scalar>(m: &DMatrix<T>) -> Result<(Vec<f64>, DMatrix<T>)> {
    if m.nrows() == 0 {
        return Ok((Vec::new(), DMatrix::zeros(0, 0)));
    }
    let h = (m + m.adjoint()) * T::of(0.5);
    let e = to_faer(&h)
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::SolverDiverged(format!("eigen: {e:?}")))?;
    let vals = e.S().column_vector().iter().map(|x| x.re()).collect();
    Ok((vals, from_faer(e.U())))
}

pub fn hermitian_eigenvalues<T: Scalar>(m: &DMatrix<T>) -> Result<Vec<f64>> {
    if m.nrows() == 0 {
        return Ok(Vec::new());
    }
    let h = (m + m.adjoint()) * T::of(0.5);
    to_faer(&h)
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::SolverDiverged(format!("eigen: {e:?}")))
}

/// Eigenvalues of a general square matrix.
pub fn eigenvalues<T: Scalar>(m: &DMatrix<T>) -> Result<Vec<Complex64>> {
    if m.nrows() == 0 {
        return Ok(Vec::new());
    }
    let mc: Mat<Complex64> = Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)].to_c64());
    mc.eigenvalues().map_err(|e| Error::SolverDiverged(format!("eigen: {e:?}")))
}

/// Ratio of extreme singular values; infinite for singular input.
pub fn condition_number<T: Scalar>(m: &DMatrix<T>) -> Result<f64> {
    let s = singular_values(m)?;
    if s.is_empty() {
        return Ok(1.0);
    }
    let smin = *s.last().unwrap();
    Ok(if smin == 0.0 { f64::INFINITY } else { s[0] / smin })
}

/// Inverse via LU; errors when the matrix is numerically singular.
pub fn inverse<T: Scalar>(m: &DMatrix<T>) -> Result<DMatrix<T>> {
    if m.nrows() != m.ncols() {
        return Err(Error::Shape(format!("inverse of {}x{}", m.nrows(), m.ncols())));
    }
    if m.nrows() == 0 {
        return Ok(m.clone());
    }
    m.clone()
        .lu()
        .try_inverse()
        .filter(|inv| inv.iter().all(|v| v.to_c64().is_finite()))
        .ok_or_else(|| Error::SolverDiverged("dense matrix is singular".into()))
}

/// Largest absolute entry.
pub fn max_abs<T: Scalar>(m: &DMatrix<T>) -> f64 {
    m.iter().fold(0.0, |a, v| a.max(v.abs_val()))
}
