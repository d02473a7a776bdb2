use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use super::space::HilbertSpace;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::sparse::CsrMatrix;

pub type Apply<T> = Arc<dyn Fn(&DVector<T>) -> DVector<T> + Send + Sync>;

#[derive(Clone)]
enum Repr<T: Scalar> {
    Dense(Arc<DMatrix<T>>),
    Sparse(Arc<CsrMatrix<T>>),
    /// Matrix-free; `adjoint` is the W-adjoint action when available.
    Func { apply: Apply<T>, adjoint: Option<Apply<T>> },
}

/// Bounded linear map between two weighted spaces.
#[derive(Clone)]
pub struct LinearOp<T: Scalar> {
    source: HilbertSpace<T>,
    target: HilbertSpace<T>,
    repr: Repr<T>,
}

impl<T: Scalar> fmt::Debug for LinearOp<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match &self.repr {
            Repr::Dense(_) => "dense",
            Repr::Sparse(_) => "sparse",
            Repr::Func { .. } => "matrix-free",
        };
        write!(f, "LinearOp({kind}, {} -> {})", self.source.dim(), self.target.dim())
    }
}

impl<T: Scalar> LinearOp<T> {
    pub fn dense(source: &HilbertSpace<T>, target: &HilbertSpace<T>, m: DMatrix<T>) -> Result<Self> {
        if m.nrows() != target.dim() || m.ncols() != source.dim() {
            return Err(Error::Shape(format!(
                "matrix {}x{} for map {} -> {}",
                m.nrows(),
                m.ncols(),
                source.dim(),
                target.dim()
            )));
        }
        Ok(LinearOp { source: source.clone(), target: target.clone(), repr: Repr::Dense(Arc::new(m)) })
    }

    pub fn sparse(source: &HilbertSpace<T>, target: &HilbertSpace<T>, m: CsrMatrix<T>) -> Result<Self> {
        if m.nrows() != target.dim() || m.ncols() != source.dim() {
            return Err(Error::Shape(format!(
                "sparse matrix {}x{} for map {} -> {}",
                m.nrows(),
                m.ncols(),
                source.dim(),
                target.dim()
            )));
        }
        Ok(LinearOp { source: source.clone(), target: target.clone(), repr: Repr::Sparse(Arc::new(m)) })
    }

    /// Matrix-free operator; `conj_transpose` applies the plain conjugate transpose Āᵀ.
    pub fn from_fn(
        source: &HilbertSpace<T>,
        target: &HilbertSpace<T>,
        apply: Apply<T>,
        conj_transpose: Option<Apply<T>>,
    ) -> Self {
        let adjoint = conj_transpose.map(|ct| {
            let (s, t) = (source.clone(), target.clone());
            Arc::new(move |y: &DVector<T>| s.solve_weight(&ct(&t.apply_weight(y)))) as Apply<T>
        });
        LinearOp { source: source.clone(), target: target.clone(), repr: Repr::Func { apply, adjoint } }
    }

    /// Matrix-free operator whose W-adjoint action is supplied directly.
    pub fn from_fn_adjoint(
        source: &HilbertSpace<T>,
        target: &HilbertSpace<T>,
        apply: Apply<T>,
        adjoint: Option<Apply<T>>,
    ) -> Self {
        LinearOp { source: source.clone(), target: target.clone(), repr: Repr::Func { apply, adjoint } }
    }

    pub fn identity(space: &HilbertSpace<T>) -> Self {
        Self::sparse(space, space, CsrMatrix::identity(space.dim())).expect("square")
    }

    pub fn zero(source: &HilbertSpace<T>, target: &HilbertSpace<T>) -> Self {
        Self::sparse(source, target, CsrMatrix::zeros(target.dim(), source.dim())).expect("shape")
    }

    pub fn source(&self) -> &HilbertSpace<T> {
        &self.source
    }

    pub fn target(&self) -> &HilbertSpace<T> {
        &self.target
    }

    pub fn is_square(&self) -> bool {
        self.source.same(&self.target)
    }

    pub fn as_dense(&self) -> Option<&DMatrix<T>> {
        match &self.repr {
            Repr::Dense(m) => Some(m),
            _ => None,
        }
    }

    pub fn as_sparse(&self) -> Option<&CsrMatrix<T>> {
        match &self.repr {
            Repr::Sparse(m) => Some(m),
            _ => None,
        }
    }

    /// Sparse matrix for dense or sparse representations.
    pub fn to_sparse(&self) -> Option<CsrMatrix<T>> {
        match &self.repr {
            Repr::Sparse(m) => Some((**m).clone()),
            Repr::Dense(m) => Some(CsrMatrix::from_dense(m)),
            Repr::Func { .. } => None,
        }
    }

    pub fn is_matrix_free(&self) -> bool {
        matches!(self.repr, Repr::Func { .. })
    }

    pub fn apply(&self, x: &DVector<T>) -> DVector<T> {
        assert_eq!(x.len(), self.source.dim(), "apply: input length");
        match &self.repr {
            Repr::Dense(m) => &**m * x,
            Repr::Sparse(m) => m.mul_vec(x),
            Repr::Func { apply, .. } => apply(x),
        }
    }

    pub fn try_apply(&self, x: &DVector<T>) -> Result<DVector<T>> {
        if x.len() != self.source.dim() {
            return Err(Error::Shape(format!("vector of length {} for source dim {}", x.len(), self.source.dim())));
        }
        Ok(self.apply(x))
    }

    /// A* = W_s⁻¹ Āᵀ W_t.
    pub fn adjoint(&self) -> Result<Self> {
        let (s, t) = (&self.source, &self.target);
        match &self.repr {
            Repr::Dense(m) => {
                let wt = t.weight_matrix();
                let mut out = m.adjoint() * wt;
                for j in 0..out.ncols() {
                    let c = s.solve_weight(&out.column(j).into_owned());
                    out.set_column(j, &c);
                }
                Self::dense(t, s, out)
            }
            Repr::Sparse(m) => match (s.diag_weights(), t.diag_weights()) {
                (Some(ws), Some(wt)) => {
                    let inv: Vec<T> = ws.iter().map(|&w| T::of(1.0 / w)).collect();
                    let wt: Vec<T> = wt.iter().map(|&w| T::of(w)).collect();
                    Self::sparse(t, s, m.conj_transpose().scale_rows(&inv).scale_cols(&wt))
                }
                _ => Self::dense(&self.source, &self.target, m.to_dense())?.adjoint(),
            },
            Repr::Func { apply, adjoint } => match adjoint {
                Some(adj) => Ok(Self::from_fn_adjoint(t, s, adj.clone(), Some(apply.clone()))),
                None => Err(Error::MissingTranspose),
            },
        }
    }

    /// A* y without materialising the adjoint operator.
    pub fn apply_adjoint(&self, y: &DVector<T>) -> Result<DVector<T>> {
        match &self.repr {
            Repr::Func { adjoint: Some(adj), .. } => Ok(adj(y)),
            Repr::Func { adjoint: None, .. } => Err(Error::MissingTranspose),
            Repr::Sparse(m) => Ok(self.source.solve_weight(&m.adjoint_mul_vec(&self.target.apply_weight(y)))),
            Repr::Dense(m) => Ok(self.source.solve_weight(&m.ad_mul(&self.target.apply_weight(y)))),
        }
    }

    pub fn to_dense(&self) -> DMatrix<T> {
        match &self.repr {
            Repr::Dense(m) => (**m).clone(),
            Repr::Sparse(m) => m.to_dense(),
            Repr::Func { apply, .. } => {
                let n = self.source.dim();
                let mut out = DMatrix::zeros(self.target.dim(), n);
                let mut e = DVector::zeros(n);
                for j in 0..n {
                    e[j] = T::one();
                    out.set_column(j, &apply(&e));
                    e[j] = T::zero();
                }
                out
            }
        }
    }

    /// self ∘ other (other applied first).
    pub fn compose(&self, other: &Self) -> Result<Self> {
        if !other.target.same(&self.source) {
            return Err(Error::Shape(format!(
                "compose: inner spaces {} and {} differ",
                other.target.dim(),
                self.source.dim()
            )));
        }
        match (&self.repr, &other.repr) {
            (Repr::Dense(a), Repr::Dense(b)) => Self::dense(&other.source, &self.target, &**a * &**b),
            (Repr::Sparse(a), Repr::Sparse(b)) => Self::sparse(&other.source, &self.target, a.matmul(b)),
            (Repr::Dense(a), Repr::Sparse(b)) => {
                Self::dense(&other.source, &self.target, (b.conj_transpose().to_dense() * a.adjoint()).adjoint())
            }
            (Repr::Sparse(a), Repr::Dense(b)) => {
                let mut out = DMatrix::zeros(a.nrows(), b.ncols());
                for j in 0..b.ncols() {
                    out.set_column(j, &a.mul_vec(&b.column(j).into_owned()));
                }
                Self::dense(&other.source, &self.target, out)
            }
            _ => {
                let (f, g) = (self.clone(), other.clone());
                let adjoint = match (self.adjoint(), other.adjoint()) {
                    (Ok(fa), Ok(ga)) => Some(Arc::new(move |y: &DVector<T>| ga.apply(&fa.apply(y))) as Apply<T>),
                    _ => None,
                };
                Ok(Self::from_fn_adjoint(
                    &other.source,
                    &self.target,
                    Arc::new(move |x: &DVector<T>| f.apply(&g.apply(x))),
                    adjoint,
                ))
            }
        }
    }

    /// self + s · other
    pub fn add_scaled(&self, s: T, other: &Self) -> Result<Self> {
        if !self.source.same(&other.source) || !self.target.same(&other.target) {
            return Err(Error::Shape("add: operators act between different spaces".into()));
        }
        match (&self.repr, &other.repr) {
            (Repr::Dense(a), Repr::Dense(b)) => Self::dense(&self.source, &self.target, &**a + &**b * s),
            (Repr::Sparse(a), Repr::Sparse(b)) => Self::sparse(&self.source, &self.target, a.add_scaled(s, b)),
            (Repr::Dense(a), Repr::Sparse(b)) => Self::dense(&self.source, &self.target, &**a + b.to_dense() * s),
            (Repr::Sparse(a), Repr::Dense(b)) => Self::dense(&self.source, &self.target, a.to_dense() + &**b * s),
            _ => {
                let (f, g) = (self.clone(), other.clone());
                let adjoint = match (self.adjoint(), other.adjoint()) {
                    (Ok(fa), Ok(ga)) => Some(Arc::new(move |y: &DVector<T>| fa.apply(y) + ga.apply(y) * s.cj())
                        as Apply<T>),
                    _ => None,
                };
                Ok(Self::from_fn_adjoint(
                    &self.source,
                    &self.target,
                    Arc::new(move |x: &DVector<T>| f.apply(x) + g.apply(x) * s),
                    adjoint,
                ))
            }
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.add_scaled(T::one(), other)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add_scaled(-T::one(), other)
    }

    pub fn scale(&self, s: T) -> Self {
        match &self.repr {
            Repr::Dense(a) => Self::dense(&self.source, &self.target, &**a * s).expect("shape"),
            Repr::Sparse(a) => Self::sparse(&self.source, &self.target, a.scale(s)).expect("shape"),
            Repr::Func { apply, adjoint } => {
                let (f, g) = (apply.clone(), adjoint.clone());
                Self::from_fn_adjoint(
                    &self.source,
                    &self.target,
                    Arc::new(move |x: &DVector<T>| f(x) * s),
                    g.map(|g| Arc::new(move |y: &DVector<T>| g(y) * s.cj()) as Apply<T>),
                )
            }
        }
    }

    /// Re T = (T + T*)/2 on a square operator.
    pub fn real_part(&self) -> Result<Self> {
        self.add(&self.adjoint()?).map(|s| s.scale(T::of(0.5)))
    }

    /// Same matrix, reinterpreted between other spaces of identical dimensions.
    pub fn with_spaces(&self, source: &HilbertSpace<T>, target: &HilbertSpace<T>) -> Result<Self> {
        if source.dim() != self.source.dim() || target.dim() != self.target.dim() {
            return Err(Error::Shape("with_spaces: dimensions differ".into()));
        }
        let keep = source.same(&self.source) && target.same(&self.target);
        let repr = match &self.repr {
            Repr::Func { apply, .. } if !keep => Repr::Func { apply: apply.clone(), adjoint: None },
            r => r.clone(),
        };
        Ok(LinearOp { source: source.clone(), target: target.clone(), repr })
    }
}
