use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::op::LinearOp;
use super::probe::random_vector;
use super::space::HilbertSpace;
use crate::dense;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Dense eigen-solvers are used up to this dimension.
pub const DENSE_LIMIT: usize = 500;
/// Condition number above which an operator counts as not continuously invertible.
pub const SINGULAR_COND: f64 = 1e12;
const LANCZOS_STEPS: usize = 160;

/// Result of testing membership in 𝓕(α, β): Re T ≥ α and Re T⁻¹ ≥ 1/β.
#[derive(Clone, Debug)]
pub struct CoercivityReport {
    pub alpha: f64,
    pub beta: f64,
    /// λ_min of Re T in the W-inner product.
    pub re_min: f64,
    /// λ_min of Re T⁻¹; NaN when T is singular.
    pub re_inv_min: f64,
    pub singular: bool,
    /// Relative slack allowed on both bounds.
    pub tol: f64,
    /// True when the minima are Lanczos estimates rather than dense eigenvalues.
    pub iterative: bool,
}

impl CoercivityReport {
    pub fn passes_alpha(&self) -> bool {
        self.re_min >= self.alpha - self.tol * self.alpha.abs().max(1.0)
    }

    pub fn passes_beta(&self) -> bool {
        let b = 1.0 / self.beta;
        !self.singular && self.re_inv_min >= b - self.tol * b.max(1.0)
    }

    pub fn passes(&self) -> bool {
        self.passes_alpha() && self.passes_beta()
    }
}

pub fn coercivity_check<T: Scalar>(op: &LinearOp<T>, alpha: f64, beta: f64) -> Result<CoercivityReport> {
    coercivity_check_tol(op, alpha, beta, 1e-9)
}

pub fn coercivity_check_tol<T: Scalar>(op: &LinearOp<T>, alpha: f64, beta: f64, tol: f64) -> Result<CoercivityReport> {
    if !op.is_square() {
        return Err(Error::Shape("coercivity check needs an operator on one space".into()));
    }
    if !(alpha > 0.0 && alpha <= beta) {
        return Err(Error::Invalid(format!("need 0 < alpha <= beta, got ({alpha}, {beta})")));
    }
    let (re_min, re_inv_min, singular, iterative) = if op.source().dim() <= DENSE_LIMIT {
        let (a, b, s) = dense_minima(op)?;
        (a, b, s, false)
    } else {
        let (a, b, s) = iterative_minima(op)?;
        (a, b, s, true)
    };
    Ok(CoercivityReport { alpha, beta, re_min, re_inv_min, singular, tol, iterative })
}

/// Matrix of `op` in coordinates where both inner products are Euclidean.
pub fn unitary_matrix<T: Scalar>(op: &LinearOp<T>) -> DMatrix<T> {
    op.target().lh_mul(&op.source().mul_lh_inv(&op.to_dense()))
}

fn dense_minima<T: Scalar>(op: &LinearOp<T>) -> Result<(f64, f64, bool)> {
    let m = unitary_matrix(op);
    if m.nrows() == 0 {
        return Ok((f64::INFINITY, f64::INFINITY, false));
    }
    let re_min = dense::hermitian_eigenvalues(&m)?[0];
    if dense::condition_number(&m)? > SINGULAR_COND {
        return Ok((re_min, f64::NAN, true));
    }
    let inv = dense::inverse(&m)?;
    Ok((re_min, dense::hermitian_eigenvalues(&inv)?[0], false))
}

fn iterative_minima<T: Scalar>(op: &LinearOp<T>) -> Result<(f64, f64, bool)> {
    let space = op.source().clone();
    let o = op.clone();
    let re = move |x: &DVector<T>| -> DVector<T> {
        (o.apply(x) + o.apply_adjoint(x).expect("adjoint")) * T::of(0.5)
    };
    op.apply_adjoint(&DVector::zeros(space.dim()))?;
    let (re_min, _) = lanczos_extremes(&space, &re, LANCZOS_STEPS, 7)?;
    let Some(m) = op.to_sparse() else {
        return Err(Error::TooLarge("inverse coercivity of a large matrix-free operator".into()));
    };
    let lu = match m.lu() {
        Ok(lu) => lu,
        Err(_) => return Ok((re_min, f64::NAN, true)),
    };
    let s2 = space.clone();
    let re_inv = move |x: &DVector<T>| -> DVector<T> {
        let fwd = lu.solve(x);
        let adj = s2.solve_weight(&lu.solve_adjoint(&s2.apply_weight(x)));
        (fwd + adj) * T::of(0.5)
    };
    let (re_inv_min, _) = lanczos_extremes(&space, &re_inv, LANCZOS_STEPS, 11)?;
    Ok((re_min, re_inv_min, false))
}

/// Extreme Ritz values of a W-self-adjoint operator after `steps` Lanczos steps
/// with full reorthogonalisation.
pub fn lanczos_extremes<T: Scalar>(
    space: &HilbertSpace<T>,
    apply: &dyn Fn(&DVector<T>) -> DVector<T>,
    steps: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    let n = space.dim();
    if n == 0 {
        return Ok((0.0, 0.0));
    }
    let m = steps.min(n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut q: DVector<T> = random_vector(n, &mut rng);
    q /= T::of(space.norm(&q));
    let mut basis: Vec<DVector<T>> = vec![q];
    let mut alphas = Vec::new();
    let mut betas = Vec::new();
    for k in 0..m {
        let mut w = apply(&basis[k]);
        let a = space.inner(&basis[k], &w).re();
        alphas.push(a);
        for _ in 0..2 {
            for b in &basis {
                let c = space.inner(b, &w);
                w -= b * c;
            }
        }
        let beta = space.norm(&w);
        if k + 1 == m || beta < 1e-12 * a.abs().max(1.0) {
            break;
        }
        betas.push(beta);
        basis.push(w / T::of(beta));
    }
    let k = alphas.len();
    let mut tri = DMatrix::<f64>::zeros(k, k);
    for i in 0..k {
        tri[(i, i)] = alphas[i];
        if i + 1 < k {
            tri[(i, i + 1)] = betas[i];
            tri[(i + 1, i)] = betas[i];
        }
    }
    let ev = dense::hermitian_eigenvalues(&tri)?;
    Ok((ev[0], ev[k - 1]))
}

/// Operator norm between the weighted spaces.
pub fn operator_norm<T: Scalar>(op: &LinearOp<T>) -> Result<f64> {
    if op.source().dim() <= DENSE_LIMIT && op.target().dim() <= DENSE_LIMIT {
        let s = dense::singular_values(&unitary_matrix(op))?;
        return Ok(s.first().copied().unwrap_or(0.0));
    }
    op.apply_adjoint(&DVector::zeros(op.target().dim()))?;
    let o = op.clone();
    let normal = move |x: &DVector<T>| o.apply_adjoint(&o.apply(x)).expect("adjoint");
    let (_, top) = lanczos_extremes(op.source(), &normal, LANCZOS_STEPS, 3)?;
    Ok(top.max(0.0).sqrt())
}
