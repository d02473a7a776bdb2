use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use super::skew::SkewOp;
use crate::dense;
use crate::error::{Error, Result};
use crate::hilbert::{coercivity_check, operator_norm, Apply, LinearOp, EXPLICIT_LIMIT, SINGULAR_COND};
use crate::scalar::Scalar;
use crate::sparse::SparseLu;

/// T(λ) = λ M₀ + M₁ with Re T(λ) ≥ c > 0 checked at construction.
#[derive(Clone, Debug)]
pub struct MaterialLaw<T: Scalar> {
    pub m0: LinearOp<T>,
    pub m1: LinearOp<T>,
    pub lambda: f64,
    t: LinearOp<T>,
    c: f64,
}

/// λ_min of Re op in the weighted inner product.
pub fn re_min<T: Scalar>(op: &LinearOp<T>) -> Result<f64> {
    Ok(coercivity_check(op, f64::MIN_POSITIVE, f64::MAX)?.re_min)
}

impl<T: Scalar> MaterialLaw<T> {
    pub fn new(m0: LinearOp<T>, m1: LinearOp<T>, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0) {
            return Err(Error::Invalid(format!("lambda must be positive, got {lambda}")));
        }
        let t = m0.scale(T::of(lambda)).add(&m1)?;
        let c = re_min(&t)?;
        if c <= 0.0 {
            let r0 = re_min(&m0)?;
            let r1 = re_min(&m1)?;
            let hint = if r0 > 0.0 {
                format!("try lambda > {:.6e}", (-r1).max(0.0) / r0)
            } else {
                "Re M0 is not positive, no lambda is guaranteed to work".to_string()
            };
            return Err(Error::Coercivity(format!("Re(lambda M0 + M1) has minimum {c:.3e} at lambda = {lambda}; {hint}")));
        }
        Ok(MaterialLaw { m0, m1, lambda, t, c })
    }

    pub fn t(&self) -> &LinearOp<T> {
        &self.t
    }
    /// The reported coercivity constant c.
    pub fn c(&self) -> f64 {
        self.c
    }
}

/// (T + A)⁻¹ as an operator with its W-adjoint: a sparse LU when both are assembled,
/// otherwise a dense inverse.
pub fn resolvent<T: Scalar>(t: &LinearOp<T>, a: &SkewOp<T>) -> Result<LinearOp<T>> {
    let h = a.space().clone();
    if !t.source().same(&h) || !t.target().same(&h) {
        return Err(Error::Shape("coefficient and skew operator act on different spaces".into()));
    }
    let sparse = match (t.to_sparse(), a.op().to_sparse(), h.diag_weights()) {
        (Some(ts), Some(as_), Some(_)) if t.as_dense().is_none() || h.dim() > EXPLICIT_LIMIT => Some(ts.add(&as_)),
        _ => None,
    };
    if let Some(m) = sparse {
        let lu = Arc::new(SparseLu::new(Arc::new(m)).map_err(|_| Error::SingularResolvent)?);
        let l2 = lu.clone();
        let hh = h.clone();
        let apply: Apply<T> = Arc::new(move |x: &DVector<T>| lu.solve(x));
        // R* = W⁻¹ (T + A)⁻ᴴ W
        let adjoint: Apply<T> = Arc::new(move |y: &DVector<T>| hh.solve_weight(&l2.solve_adjoint(&hh.apply_weight(y))));
        return Ok(LinearOp::from_fn_adjoint(&h, &h, apply, Some(adjoint)));
    }
    if h.dim() > EXPLICIT_LIMIT {
        return Err(Error::TooLarge(format!("dense resolvent in dimension {}", h.dim())));
    }
    let m = t.to_dense() + a.op().to_dense();
    let cond = dense::condition_number(&m)?;
    if cond > SINGULAR_COND {
        return Err(Error::SingularResolvent);
    }
    LinearOp::dense(&h, &h, dense::inverse(&m)?)
}

#[derive(Clone, Copy, Debug)]
pub struct ResolventBounds {
    /// ‖(T + A)⁻¹‖
    pub inverse_norm: f64,
    /// ‖A (T + A)⁻¹‖
    pub a_inverse_norm: f64,
    pub c: f64,
    pub t_norm: f64,
}

impl ResolventBounds {
    pub fn inverse_bound(&self) -> f64 {
        1.0 / self.c
    }
    pub fn a_inverse_bound(&self) -> f64 {
        (self.c + self.t_norm) / self.c
    }
}

/// Operator norms of (T + A)⁻¹ and A(T + A)⁻¹, asserted against 1/c and (c + ‖T‖)/c.
pub fn resolvent_bounds<T: Scalar>(t: &LinearOp<T>, a: &SkewOp<T>) -> Result<ResolventBounds> {
    let c = re_min(t)?;
    if c <= 0.0 {
        return Err(Error::Coercivity(format!("Re T has minimum {c:.3e}")));
    }
    let r = resolvent(t, a)?;
    let ar = a.op().compose(&r)?;
    let b = ResolventBounds {
        inverse_norm: operator_norm(&r)?,
        a_inverse_norm: operator_norm(&ar)?,
        c,
        t_norm: operator_norm(t)?,
    };
    let slack = 1.0 + 1e-9;
    if b.inverse_norm > b.inverse_bound() * slack || b.a_inverse_norm > b.a_inverse_bound() * slack {
        return Err(Error::Internal(format!(
            "resolvent bounds violated: {:.6e} vs {:.6e}, {:.6e} vs {:.6e}",
            b.inverse_norm,
            b.inverse_bound(),
            b.a_inverse_norm,
            b.a_inverse_bound()
        )));
    }
    Ok(b)
}

#[derive(Clone, Debug)]
pub struct BlockSolution<T: Scalar> {
    pub u: DVector<T>,
    /// ‖(T + A)u − f‖ / ‖f‖
    pub residual: f64,
    /// ‖u − (T + A)⁻¹ f‖ / ‖u‖ against the monolithic solve.
    pub direct_gap: f64,
}

fn solve_dense<T: Scalar>(m: &DMatrix<T>, b: &DVector<T>, what: &str) -> Result<DVector<T>> {
    if m.nrows() == 0 {
        return Ok(DVector::zeros(0));
    }
    let cond = dense::condition_number(m)?;
    if cond > SINGULAR_COND {
        return Err(Error::Internal(format!("{what} is singular (condition {cond:e})")));
    }
    m.clone().lu().solve(b).ok_or_else(|| Error::Internal(format!("{what} is singular")))
}

/// Solves (T + A)u = f by eliminating the ker A component:
/// u₁ = (T_S + Ã)⁻¹(f₁ − T₁₀T₀₀⁻¹f₀), u₀ = T₀₀⁻¹f₀ − T₀₀⁻¹T₀₁u₁.
pub fn block_solve<T: Scalar>(t: &LinearOp<T>, a: &SkewOp<T>, f: &DVector<T>) -> Result<BlockSolution<T>> {
    let red = a
        .reduced()
        .ok_or_else(|| Error::TooLarge("block elimination needs the explicit ker/ran split".into()))?;
    let h = a.space();
    if f.len() != h.dim() {
        return Err(Error::Shape(format!("right-hand side has length {}, space dim {}", f.len(), h.dim())));
    }
    let c = re_min(t)?;
    if c <= 0.0 {
        return Err(Error::Coercivity(format!("Re T has minimum {c:.3e}")));
    }
    let (ker, ran) = (a.ker(), a.ran());
    let b0 = ker.basis().expect("explicit");
    let b1 = ran.basis().expect("explicit");
    let w = h.weight_matrix();
    let tm = t.to_dense();
    let (l0, l1) = (b0.adjoint() * &w, b1.adjoint() * &w);
    let t00 = &l0 * &tm * b0;
    let t01 = &l0 * &tm * b1;
    let t10 = &l1 * &tm * b0;
    let t11 = &l1 * &tm * b1;
    let f0 = &l0 * f;
    let f1 = &l1 * f;

    let (g0, t00_t01) = if t00.nrows() == 0 {
        (DVector::zeros(0), DMatrix::zeros(0, b1.ncols()))
    } else {
        let lu = t00.clone().lu();
        let g0 = lu.solve(&f0).ok_or_else(|| Error::Internal("T00 is singular".into()))?;
        let x = lu.solve(&t01).ok_or_else(|| Error::Internal("T00 is singular".into()))?;
        (g0, x)
    };
    let ts = &t11 - &t10 * &t00_t01;
    let u1 = solve_dense(&(ts + red), &(&f1 - &t10 * &g0), "T_S + Ã")?;
    let u0 = &g0 - &t00_t01 * &u1;
    let u = b0 * &u0 + b1 * &u1;

    let nf = h.norm(f).max(f64::MIN_POSITIVE);
    let residual = h.norm(&(t.apply(&u) + a.apply(&u) - f)) / nf;
    let direct = resolvent(t, a)?.apply(f);
    let direct_gap = h.norm(&(&u - &direct)) / h.norm(&u).max(f64::MIN_POSITIVE);
    if residual > 1e-9 || direct_gap > 1e-9 {
        return Err(Error::Internal(format!("elimination disagrees: residual {residual:e}, direct gap {direct_gap:e}")));
    }
    Ok(BlockSolution { u, residual, direct_gap })
}

/// Coefficient t with (t + A)⁻¹ = s, i.e. t = K s⁻¹ with K g = g − A s g.
pub fn recover_coefficient<T: Scalar>(s: &LinearOp<T>, a: &SkewOp<T>) -> Result<LinearOp<T>> {
    let h = a.space();
    if !s.source().same(h) || !s.target().same(h) {
        return Err(Error::Shape("resolvent and skew operator act on different spaces".into()));
    }
    if h.dim() > EXPLICIT_LIMIT {
        return Err(Error::TooLarge(format!("coefficient recovery in dimension {}", h.dim())));
    }
    let sm = s.to_dense();
    let cond = dense::condition_number(&sm)?;
    if !cond.is_finite() || cond > SINGULAR_COND {
        return Err(Error::SingularResolvent);
    }
    let s_inv = dense::inverse(&sm)?;
    let am = a.op().to_dense();
    let k = DMatrix::identity(h.dim(), h.dim()) - &am * &sm;
    let t = k * &s_inv;
    let back = dense::inverse(&(&t + &am))?;
    let err = dense::max_abs(&(&back - &sm)) / dense::max_abs(&sm).max(f64::MIN_POSITIVE);
    if err > 1e-9 {
        return Err(Error::Internal(format!("recovered coefficient fails the round trip ({err:e})")));
    }
    LinearOp::dense(h, h, t)
}
