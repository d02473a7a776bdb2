use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use super::op::{Apply, LinearOp};
use super::space::HilbertSpace;
use crate::dense;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::sparse::{CsrMatrix, SparseLu};

/// Explicit bases are used up to this dimension; beyond it subspaces must be implicit.
pub const EXPLICIT_LIMIT: usize = 2000;

/// Injective sparse G spanning ran(G), with the factorised Gram matrix GᴴWG.
pub struct Generator<T: Scalar> {
    ambient: HilbertSpace<T>,
    g: CsrMatrix<T>,
    gh_w: CsrMatrix<T>,
    gram: Option<SparseLu<T>>,
}

impl<T: Scalar> Generator<T> {
    pub fn new(ambient: &HilbertSpace<T>, g: CsrMatrix<T>) -> Result<Arc<Self>> {
        let w = ambient
            .diag_weights()
            .ok_or_else(|| Error::Invalid("implicit subspaces need a diagonal weight".into()))?;
        if g.nrows() != ambient.dim() {
            return Err(Error::Shape(format!("generator has {} rows, space dim {}", g.nrows(), ambient.dim())));
        }
        let wt: Vec<T> = w.iter().map(|&x| T::of(x)).collect();
        let gh_w = g.conj_transpose().scale_cols(&wt);
        let gram = if g.ncols() == 0 {
            None
        } else {
            let m = Arc::new(gh_w.matmul(&g));
            let f = SparseLu::cholesky(m.clone())
                .or_else(|_| SparseLu::new(m))
                .map_err(|_| Error::Invalid("generator is not injective".into()))?;
            Some(f)
        };
        Ok(Arc::new(Generator { ambient: ambient.clone(), g, gh_w, gram }))
    }

    pub fn matrix(&self) -> &CsrMatrix<T> {
        &self.g
    }

    /// Gᴴ W as a sparse matrix.
    pub fn gh_w(&self) -> &CsrMatrix<T> {
        &self.gh_w
    }

    pub fn ambient(&self) -> &HilbertSpace<T> {
        &self.ambient
    }

    pub fn rank(&self) -> usize {
        self.g.ncols()
    }

    /// (GᴴWG)⁻¹ GᴴW x
    pub fn coeffs(&self, x: &DVector<T>) -> DVector<T> {
        match &self.gram {
            None => DVector::zeros(0),
            Some(f) => f.solve(&self.gh_w.mul_vec(x)),
        }
    }

    pub fn project(&self, x: &DVector<T>) -> DVector<T> {
        if self.gram.is_none() {
            return DVector::zeros(x.len());
        }
        self.g.mul_vec(&self.coeffs(x))
    }
}

#[derive(Clone)]
enum Repr<T: Scalar> {
    /// W-orthonormal columns, with the Euclidean coordinate space they parametrise.
    Basis { b: DMatrix<T>, coords: HilbertSpace<T> },
    Range(Arc<Generator<T>>),
    Complement(Arc<Generator<T>>),
}

/// Closed subspace of a weighted space.
#[derive(Clone)]
pub struct Subspace<T: Scalar> {
    ambient: HilbertSpace<T>,
    repr: Repr<T>,
}

impl<T: Scalar> std::fmt::Debug for Subspace<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let kind = if self.is_explicit() { "explicit" } else { "implicit" };
        write!(f, "Subspace({kind}, dim {} of {})", self.dim(), self.ambient.dim())
    }
}

impl<T: Scalar> Subspace<T> {
    /// Wraps a basis that is already W-orthonormal (checked to 1e-10).
    pub fn from_orthonormal(ambient: &HilbertSpace<T>, b: DMatrix<T>) -> Result<Self> {
        if b.nrows() != ambient.dim() {
            return Err(Error::Shape("basis rows differ from the space dimension".into()));
        }
        let gram = b.adjoint() * ambient.weight_matrix() * &b;
        let defect = dense::max_abs(&(gram - DMatrix::identity(b.ncols(), b.ncols())));
        if defect > 1e-10 {
            return Err(Error::Invalid(format!("basis is not orthonormal (defect {defect:e})")));
        }
        Ok(Self::basis_unchecked(ambient, b))
    }

    fn basis_unchecked(ambient: &HilbertSpace<T>, b: DMatrix<T>) -> Self {
        let coords = HilbertSpace::euclidean(b.ncols());
        Subspace { ambient: ambient.clone(), repr: Repr::Basis { b, coords } }
    }

    /// Orthonormal basis of the span of the columns; directions below `rel_tol · σ_max` are dropped.
    pub fn span(ambient: &HilbertSpace<T>, vectors: &DMatrix<T>, rel_tol: f64) -> Result<Self> {
        if vectors.nrows() != ambient.dim() {
            return Err(Error::Shape("spanning vectors have the wrong length".into()));
        }
        if ambient.dim() > EXPLICIT_LIMIT {
            return Err(Error::TooLarge(format!("explicit basis in dimension {}", ambient.dim())));
        }
        let y = ambient.lh_mul(vectors);
        let (u, s, _) = dense::svd_full(&y)?;
        let smax = s.first().copied().unwrap_or(0.0);
        let r = s.iter().filter(|&&x| smax > 0.0 && x > rel_tol * smax).count();
        let b = ambient.lh_inv_mul(&u.columns(0, r).into_owned());
        Ok(Self::basis_unchecked(ambient, b))
    }

    pub fn full(ambient: &HilbertSpace<T>) -> Result<Self> {
        if ambient.dim() <= EXPLICIT_LIMIT {
            let b = ambient.lh_inv_mul(&DMatrix::identity(ambient.dim(), ambient.dim()));
            Ok(Self::basis_unchecked(ambient, b))
        } else {
            Self::complement_of_range(ambient, CsrMatrix::zeros(ambient.dim(), 0))
        }
    }

    pub fn zero(ambient: &HilbertSpace<T>) -> Result<Self> {
        if ambient.dim() <= EXPLICIT_LIMIT {
            Ok(Self::basis_unchecked(ambient, DMatrix::zeros(ambient.dim(), 0)))
        } else {
            Self::range_of(ambient, CsrMatrix::zeros(ambient.dim(), 0))
        }
    }

    /// ran(G) held implicitly; G must be injective.
    pub fn range_of(ambient: &HilbertSpace<T>, g: CsrMatrix<T>) -> Result<Self> {
        Ok(Subspace { ambient: ambient.clone(), repr: Repr::Range(Generator::new(ambient, g)?) })
    }

    /// ran(G)^⊥ held implicitly.
    pub fn complement_of_range(ambient: &HilbertSpace<T>, g: CsrMatrix<T>) -> Result<Self> {
        Ok(Subspace { ambient: ambient.clone(), repr: Repr::Complement(Generator::new(ambient, g)?) })
    }

    pub fn ambient(&self) -> &HilbertSpace<T> {
        &self.ambient
    }

    pub fn is_explicit(&self) -> bool {
        matches!(self.repr, Repr::Basis { .. })
    }

    pub fn dim(&self) -> usize {
        match &self.repr {
            Repr::Basis { b, .. } => b.ncols(),
            Repr::Range(g) => g.rank(),
            Repr::Complement(g) => self.ambient.dim() - g.rank(),
        }
    }

    pub fn basis(&self) -> Option<&DMatrix<T>> {
        match &self.repr {
            Repr::Basis { b, .. } => Some(b),
            _ => None,
        }
    }

    /// Space in which operators on this subspace act: coordinates (explicit) or the ambient space (implicit).
    pub fn op_space(&self) -> &HilbertSpace<T> {
        match &self.repr {
            Repr::Basis { coords, .. } => coords,
            _ => &self.ambient,
        }
    }

    /// Generator of the implicit representation, with a flag telling whether the subspace is its complement.
    pub fn generator(&self) -> Option<(&Arc<Generator<T>>, bool)> {
        match &self.repr {
            Repr::Basis { .. } => None,
            Repr::Range(g) => Some((g, false)),
            Repr::Complement(g) => Some((g, true)),
        }
    }

    /// Orthogonal projection P x.
    pub fn project(&self, x: &DVector<T>) -> DVector<T> {
        match &self.repr {
            Repr::Basis { b, .. } => b * (b.adjoint() * self.ambient.apply_weight(x)),
            Repr::Range(g) => g.project(x),
            Repr::Complement(g) => x - g.project(x),
        }
    }

    /// ι* x: coordinates (explicit) or projection (implicit).
    pub fn restrict(&self, x: &DVector<T>) -> DVector<T> {
        match &self.repr {
            Repr::Basis { b, .. } => b.adjoint() * self.ambient.apply_weight(x),
            _ => self.project(x),
        }
    }

    /// ι c: embeds an element of [`Self::op_space`] into the ambient space.
    pub fn embed(&self, c: &DVector<T>) -> DVector<T> {
        match &self.repr {
            Repr::Basis { b, .. } => b * c,
            _ => c.clone(),
        }
    }

    /// ι as an operator from [`Self::op_space`] into the ambient space.
    pub fn embedding(&self) -> LinearOp<T> {
        match &self.repr {
            Repr::Basis { b, coords } => LinearOp::dense(coords, &self.ambient, b.clone()).expect("shape"),
            _ => self.projector(),
        }
    }

    /// ι* as an operator from the ambient space into [`Self::op_space`].
    pub fn coembedding(&self) -> LinearOp<T> {
        match &self.repr {
            Repr::Basis { b, coords } => {
                let m = b.adjoint() * self.ambient.weight_matrix();
                LinearOp::dense(&self.ambient, coords, m).expect("shape")
            }
            _ => self.projector(),
        }
    }

    pub fn projector(&self) -> LinearOp<T> {
        match &self.repr {
            Repr::Basis { b, .. } => {
                let m = b * b.adjoint() * self.ambient.weight_matrix();
                LinearOp::dense(&self.ambient, &self.ambient, m).expect("shape")
            }
            _ => {
                let s = self.clone();
                let p: Apply<T> = Arc::new(move |x: &DVector<T>| s.project(x));
                LinearOp::from_fn_adjoint(&self.ambient, &self.ambient, p.clone(), Some(p))
            }
        }
    }

    /// Orthogonal complement in the ambient space.
    pub fn complement(&self) -> Result<Self> {
        match &self.repr {
            Repr::Basis { b, .. } => {
                let n = self.ambient.dim();
                let k = b.ncols();
                if k == 0 {
                    return Self::full(&self.ambient);
                }
                let (u, _, _) = dense::svd_full(&self.ambient.lh_mul(b))?;
                let c = self.ambient.lh_inv_mul(&u.columns(k, n - k).into_owned());
                Ok(Self::basis_unchecked(&self.ambient, c))
            }
            Repr::Range(g) => Ok(Subspace { ambient: self.ambient.clone(), repr: Repr::Complement(g.clone()) }),
            Repr::Complement(g) => Ok(Subspace { ambient: self.ambient.clone(), repr: Repr::Range(g.clone()) }),
        }
    }

    /// Explicit orthonormal basis of the same subspace (small dimensions only).
    pub fn to_explicit(&self) -> Result<Self> {
        match &self.repr {
            Repr::Basis { .. } => Ok(self.clone()),
            Repr::Range(g) => Self::span(&self.ambient, &g.matrix().to_dense(), 1e-12),
            Repr::Complement(g) => Self::span(&self.ambient, &g.matrix().to_dense(), 1e-12)?.complement(),
        }
    }

    /// Orthonormality defect (explicit) or the larger of the idempotency and
    /// self-adjointness defects measured on `probes` (implicit).
    pub fn defect(&self, probes: &[DVector<T>]) -> f64 {
        match &self.repr {
            Repr::Basis { b, .. } => {
                let gram = b.adjoint() * self.ambient.weight_matrix() * b;
                dense::max_abs(&(gram - DMatrix::identity(b.ncols(), b.ncols())))
            }
            _ => {
                let mut worst = 0.0f64;
                for (i, x) in probes.iter().enumerate() {
                    let px = self.project(x);
                    let nx = self.ambient.norm(x).max(f64::MIN_POSITIVE);
                    worst = worst.max(self.ambient.norm(&(&px - self.project(&px))) / nx);
                    let y = &probes[(i + 1) % probes.len()];
                    let ny = self.ambient.norm(y).max(f64::MIN_POSITIVE);
                    let lhs = self.ambient.inner(y, &px);
                    let rhs = self.ambient.inner(&self.project(y), x);
                    worst = worst.max((lhs - rhs).abs_val() / (nx * ny));
                }
                worst
            }
        }
    }
}

/// Orthonormal bases of ker(op) ⊆ source and ran(op) ⊆ target from a weighted SVD.
/// Singular values at or below `rel_tol · σ_max` count as zero.
pub fn kernel_range<T: Scalar>(op: &LinearOp<T>, rel_tol: f64) -> Result<(Subspace<T>, Subspace<T>)> {
    let (s, t) = (op.source(), op.target());
    if s.dim() > EXPLICIT_LIMIT || t.dim() > EXPLICIT_LIMIT {
        return Err(Error::TooLarge(format!("kernel_range on a {}x{} operator", t.dim(), s.dim())));
    }
    if rel_tol <= 0.0 {
        return Err(Error::Invalid("rank tolerance must be positive".into()));
    }
    let m = t.lh_mul(&s.mul_lh_inv(&op.to_dense()));
    let (u, sv, v) = dense::svd_full(&m)?;
    let smax = sv.first().copied().unwrap_or(0.0);
    let r = sv.iter().filter(|&&x| smax > 0.0 && x > rel_tol * smax).count();
    let ker = s.lh_inv_mul(&v.columns(r, s.dim() - r).into_owned());
    let ran = t.lh_inv_mul(&u.columns(0, r).into_owned());
    Ok((Subspace::basis_unchecked(s, ker), Subspace::basis_unchecked(t, ran)))
}
