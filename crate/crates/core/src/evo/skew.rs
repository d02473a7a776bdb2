use nalgebra::{DMatrix, DVector};

use crate::dense;
use crate::error::{Error, Result};
use crate::hilbert::{kernel_range, unitary_matrix, HilbertSpace, LinearOp, ProbeSet, Subspace, EXPLICIT_LIMIT, SINGULAR_COND};
use crate::scalar::Scalar;
use crate::schur::{blocks, Decomposition};
use crate::sparse::CsrMatrix;

const SKEW_TOL: f64 = 1e-10;
const BLOCK_TOL: f64 = 1e-9;

/// Ã on ran(A) in orthonormal coordinates, with its inverse.
#[derive(Clone, Debug)]
struct Reduced<T: Scalar> {
    a: DMatrix<T>,
    inv: DMatrix<T>,
    cond: f64,
}

/// Skew-adjoint operator split along H = ker A ⊕ ran A.
#[derive(Clone, Debug)]
pub struct SkewOp<T: Scalar> {
    op: LinearOp<T>,
    dec: Decomposition<T>,
    reduced: Option<Reduced<T>>,
    defect: f64,
}

fn rel_defect<T: Scalar>(m: &DMatrix<T>, adj: &DMatrix<T>) -> f64 {
    dense::max_abs(&(m + adj)) / dense::max_abs(m).max(1.0)
}

/// Explicit split through a weighted SVD; a is required to satisfy a* = −a to 1e-10.
pub fn skew_split<T: Scalar>(a: &LinearOp<T>) -> Result<SkewOp<T>> {
    if !a.is_square() {
        return Err(Error::Shape("skew operator must act on one space".into()));
    }
    let n = a.source().dim();
    if n > EXPLICIT_LIMIT {
        return Err(Error::TooLarge(format!("explicit skew split in dimension {n}; use SkewOp::with_range")));
    }
    let m = a.to_dense();
    let defect = rel_defect(&m, &a.adjoint()?.to_dense());
    if defect > SKEW_TOL {
        return Err(Error::NotSkew(defect));
    }
    let (ker, ran) = kernel_range(a, SKEW_TOL)?;
    let dec = Decomposition::from_pair(ker, ran)?;
    let reduced = if dec.h1().dim() == 0 {
        Reduced { a: DMatrix::zeros(0, 0), inv: DMatrix::zeros(0, 0), cond: 1.0 }
    } else {
        let b = blocks(a, &dec)?;
        let scale = dense::max_abs(&m).max(1.0);
        let off = [&b.a00, &b.a01, &b.a10].iter().map(|x| dense::max_abs(&x.to_dense())).fold(0.0, f64::max) / scale;
        if off > BLOCK_TOL {
            return Err(Error::Internal(format!("skew operator is not block diagonal on ker ⊕ ran ({off:e})")));
        }
        let red = b.a11.to_dense();
        let cond = dense::condition_number(&red)?;
        if cond > SINGULAR_COND {
            return Err(Error::Internal(format!("reduced operator is singular (condition {cond:e})")));
        }
        let inv = dense::inverse(&red)?;
        Reduced { a: red, inv, cond }
    };
    Ok(SkewOp { op: a.clone(), dec, reduced: Some(reduced), defect })
}

impl<T: Scalar> SkewOp<T> {
    /// Implicit split with ran A = ran G for an injective sparse G. The claim is checked on
    /// seeded probes: skewness, A H ⊆ ran G and A (ran G)^⊥ = 0.
    pub fn with_range(a: &LinearOp<T>, g: CsrMatrix<T>) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::Shape("skew operator must act on one space".into()));
        }
        let h = a.source().clone();
        let ran = Subspace::range_of(&h, g.clone())?;
        let ker = Subspace::complement_of_range(&h, g)?;
        let probes = ProbeSet::random(&h, 6, 0x5eed);
        let v = probes.vectors();
        let mut defect = 0.0f64;
        let mut leak = 0.0f64;
        for (i, x) in v.iter().enumerate() {
            let y = &v[(i + 1) % v.len()];
            let (ax, ay) = (a.apply(x), a.apply(y));
            let s = h.norm(x) * h.norm(y) * (h.norm(&ax) / h.norm(x)).max(h.norm(&ay) / h.norm(y)).max(1e-300);
            defect = defect.max((h.inner(x, &ay) + h.inner(&ax, y)).abs_val() / s);
            let nax = h.norm(&ax).max(1e-300);
            leak = leak.max(h.norm(&ker.project(&ax)) / nax);
            leak = leak.max(h.norm(&a.apply(&ker.project(x))) / nax.max(h.norm(x)));
        }
        if defect > SKEW_TOL {
            return Err(Error::NotSkew(defect));
        }
        if leak > BLOCK_TOL {
            return Err(Error::Invalid(format!("ran G is not the range of the operator (leak {leak:e})")));
        }
        let dec = Decomposition::from_pair(ker, ran)?;
        Ok(SkewOp { op: a.clone(), dec, reduced: None, defect })
    }

    pub fn op(&self) -> &LinearOp<T> {
        &self.op
    }
    pub fn space(&self) -> &HilbertSpace<T> {
        self.op.source()
    }
    /// (ker A, ran A)
    pub fn decomposition(&self) -> &Decomposition<T> {
        &self.dec
    }
    pub fn ker(&self) -> &Subspace<T> {
        self.dec.h0()
    }
    pub fn ran(&self) -> &Subspace<T> {
        self.dec.h1()
    }
    pub fn is_explicit(&self) -> bool {
        self.reduced.is_some()
    }
    /// Relative skewness defect measured at construction.
    pub fn defect(&self) -> f64 {
        self.defect
    }
    pub fn reduced(&self) -> Option<&DMatrix<T>> {
        self.reduced.as_ref().map(|r| &r.a)
    }
    pub fn reduced_inverse(&self) -> Option<&DMatrix<T>> {
        self.reduced.as_ref().map(|r| &r.inv)
    }
    pub fn reduced_condition(&self) -> Option<f64> {
        self.reduced.as_ref().map(|r| r.cond)
    }

    /// max |Re λ| over the spectrum, relative to the spectral radius (explicit only).
    pub fn spectrum_defect(&self) -> Result<f64> {
        if self.space().dim() > EXPLICIT_LIMIT {
            return Err(Error::TooLarge("spectrum of a large skew operator".into()));
        }
        let ev = dense::eigenvalues(&unitary_matrix(&self.op))?;
        let rho = ev.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1.0);
        Ok(ev.iter().map(|z| z.re.abs()).fold(0.0, f64::max) / rho)
    }

    pub fn apply(&self, x: &DVector<T>) -> DVector<T> {
        self.op.apply(x)
    }
}

/// Operator on the product of `parts` with B at block (i, j) and −B* at (j, i) for every
/// (i, j, B), B mapping part j into part i. The result is skew by construction.
pub fn skew_from_blocks<T: Scalar>(
    parts: &[&HilbertSpace<T>],
    pieces: &[(usize, usize, &CsrMatrix<T>)],
) -> Result<(HilbertSpace<T>, LinearOp<T>)> {
    let space = HilbertSpace::product(parts)?;
    let sizes: Vec<usize> = parts.iter().map(|p| p.dim()).collect();
    let mut owned = Vec::new();
    for &(i, j, b) in pieces {
        if i == j {
            return Err(Error::Invalid("skew blocks must be off-diagonal".into()));
        }
        if b.nrows() != sizes[i] || b.ncols() != sizes[j] {
            return Err(Error::Shape(format!("block ({i},{j}) is {}x{}", b.nrows(), b.ncols())));
        }
        let wi = parts[i].diag_weights().expect("product checked diagonal weights");
        let wj = parts[j].diag_weights().expect("product checked diagonal weights");
        let inv_wj: Vec<T> = wj.iter().map(|&w| T::of(-1.0 / w)).collect();
        let wi: Vec<T> = wi.iter().map(|&w| T::of(w)).collect();
        owned.push((i, j, b.clone()));
        owned.push((j, i, b.conj_transpose().scale_rows(&inv_wj).scale_cols(&wi)));
    }
    let refs: Vec<(usize, usize, &CsrMatrix<T>)> = owned.iter().map(|(i, j, m)| (*i, *j, m)).collect();
    let m = CsrMatrix::block(&sizes, &sizes, &refs);
    let op = LinearOp::sparse(&space, &space, m)?;
    Ok((space, op))
}

/// Block-diagonal sparse matrix from square pieces.
pub fn block_diagonal<T: Scalar>(pieces: &[&CsrMatrix<T>]) -> CsrMatrix<T> {
    let sizes: Vec<usize> = pieces.iter().map(|p| p.nrows()).collect();
    let cols: Vec<usize> = pieces.iter().map(|p| p.ncols()).collect();
    let refs: Vec<(usize, usize, &CsrMatrix<T>)> = pieces.iter().enumerate().map(|(k, m)| (k, k, *m)).collect();
    CsrMatrix::block(&sizes, &cols, &refs)
}
