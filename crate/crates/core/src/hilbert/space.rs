use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Gram matrix of a finite-dimensional inner-product space.
#[derive(Clone, Debug)]
pub enum Weight<T: Scalar> {
    Diagonal(Vec<f64>),
    /// Hermitian positive definite W together with its Cholesky factor L (W = L Lᴴ).
    Dense { w: DMatrix<T>, l: DMatrix<T> },
}

#[derive(Debug)]
struct Inner<T: Scalar> {
    dim: usize,
    weight: Weight<T>,
}

/// 𝕂ⁿ with ⟨x, y⟩ = xᴴ W y (anti-linear in the first slot).
#[derive(Clone, Debug)]
pub struct HilbertSpace<T: Scalar>(Arc<Inner<T>>);

impl<T: Scalar> HilbertSpace<T> {
    pub fn euclidean(dim: usize) -> Self {
        HilbertSpace(Arc::new(Inner { dim, weight: Weight::Diagonal(vec![1.0; dim]) }))
    }

    pub fn diagonal(w: Vec<f64>) -> Result<Self> {
        if let Some(bad) = w.iter().find(|&&x| !(x > 0.0 && x.is_finite())) {
            return Err(Error::Invalid(format!("weight entry {bad} is not positive")));
        }
        Ok(HilbertSpace(Arc::new(Inner { dim: w.len(), weight: Weight::Diagonal(w) })))
    }

    pub fn dense(w: DMatrix<T>) -> Result<Self> {
        if w.nrows() != w.ncols() {
            return Err(Error::Shape("weight matrix must be square".into()));
        }
        let asym = crate::dense::max_abs(&(&w - w.adjoint()));
        if asym > 1e-12 * crate::dense::max_abs(&w).max(1.0) {
            return Err(Error::Invalid(format!("weight is not Hermitian (defect {asym:e})")));
        }
        let chol = w
            .clone()
            .cholesky()
            .ok_or_else(|| Error::Invalid("weight is not positive definite".into()))?;
        let l = chol.l();
        Ok(HilbertSpace(Arc::new(Inner { dim: w.nrows(), weight: Weight::Dense { w, l } })))
    }

    /// Orthogonal direct sum of diagonal-weight spaces.
    pub fn product(parts: &[&HilbertSpace<T>]) -> Result<Self> {
        let mut w = Vec::new();
        for p in parts {
            match &p.0.weight {
                Weight::Diagonal(d) => w.extend_from_slice(d),
                Weight::Dense { .. } => {
                    return Err(Error::Invalid("product of dense-weight spaces".into()))
                }
            }
        }
        Self::diagonal(w)
    }

    pub fn dim(&self) -> usize {
        self.0.dim
    }

    pub fn weight(&self) -> &Weight<T> {
        &self.0.weight
    }

    pub fn diag_weights(&self) -> Option<&[f64]> {
        match &self.0.weight {
            Weight::Diagonal(d) => Some(d),
            Weight::Dense { .. } => None,
        }
    }

    pub fn is_complex(&self) -> bool {
        T::IS_COMPLEX
    }

    /// Same underlying space (identical handle or identical Gram matrix).
    pub fn same(&self, other: &Self) -> bool {
        if Arc::ptr_eq(&self.0, &other.0) {
            return true;
        }
        if self.dim() != other.dim() {
            return false;
        }
        match (&self.0.weight, &other.0.weight) {
            (Weight::Diagonal(a), Weight::Diagonal(b)) => a == b,
            (Weight::Dense { w: a, .. }, Weight::Dense { w: b, .. }) => a == b,
            _ => false,
        }
    }

    pub fn weight_matrix(&self) -> DMatrix<T> {
        match &self.0.weight {
            Weight::Diagonal(d) => {
                DMatrix::from_diagonal(&DVector::from_iterator(d.len(), d.iter().map(|&x| T::of(x))))
            }
            Weight::Dense { w, .. } => w.clone(),
        }
    }

    /// W x
    pub fn apply_weight(&self, x: &DVector<T>) -> DVector<T> {
        match &self.0.weight {
            Weight::Diagonal(d) => DVector::from_fn(x.len(), |i, _| x[i] * T::of(d[i])),
            Weight::Dense { w, .. } => w * x,
        }
    }

    /// W⁻¹ x
    pub fn solve_weight(&self, x: &DVector<T>) -> DVector<T> {
        match &self.0.weight {
            Weight::Diagonal(d) => DVector::from_fn(x.len(), |i, _| x[i] * T::of(1.0 / d[i])),
            Weight::Dense { l, .. } => {
                let y = l.solve_lower_triangular(x).expect("cholesky factor");
                l.adjoint().solve_upper_triangular(&y).expect("cholesky factor")
            }
        }
    }

    pub fn inner(&self, x: &DVector<T>, y: &DVector<T>) -> T {
        debug_assert_eq!(x.len(), self.dim());
        match &self.0.weight {
            Weight::Diagonal(d) => {
                let mut s = T::zero();
                for i in 0..x.len() {
                    s += x[i].cj() * y[i] * T::of(d[i]);
                }
                s
            }
            Weight::Dense { w, .. } => x.dotc(&(w * y)),
        }
    }

    pub fn norm(&self, x: &DVector<T>) -> f64 {
        self.inner(x, x).re().max(0.0).sqrt()
    }

    /// Lᴴ m; maps coordinates into ones where the inner product is Euclidean.
    pub fn lh_mul(&self, m: &DMatrix<T>) -> DMatrix<T> {
        match &self.0.weight {
            Weight::Diagonal(d) => scale_rows(m, d, 0.5),
            Weight::Dense { l, .. } => l.adjoint() * m,
        }
    }

    /// L⁻ᴴ m
    pub fn lh_inv_mul(&self, m: &DMatrix<T>) -> DMatrix<T> {
        match &self.0.weight {
            Weight::Diagonal(d) => scale_rows(m, d, -0.5),
            Weight::Dense { l, .. } => l.adjoint().solve_upper_triangular(m).expect("cholesky factor"),
        }
    }

    /// m Lᴴ
    pub fn mul_lh(&self, m: &DMatrix<T>) -> DMatrix<T> {
        match &self.0.weight {
            Weight::Diagonal(d) => scale_rows(&m.transpose(), d, 0.5).transpose(),
            Weight::Dense { l, .. } => m * l.adjoint(),
        }
    }

    /// m L⁻ᴴ
    pub fn mul_lh_inv(&self, m: &DMatrix<T>) -> DMatrix<T> {
        match &self.0.weight {
            Weight::Diagonal(d) => scale_rows(&m.transpose(), d, -0.5).transpose(),
            Weight::Dense { l, .. } => {
                l.solve_lower_triangular(&m.adjoint()).expect("cholesky factor").adjoint()
            }
        }
    }
}

fn scale_rows<T: Scalar>(m: &DMatrix<T>, d: &[f64], power: f64) -> DMatrix<T> {
    let mut out = m.clone();
    for (i, mut row) in out.row_iter_mut().enumerate() {
        row *= T::of(d[i].powf(power));
    }
    out
}
