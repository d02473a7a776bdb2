//! Block calculus along an orthogonal splitting H = H₀ ⊕ H₁: the blocks a_jk = ι_j* a ι_k,
//! the four maps generating the Schur topology τ(H₀, H₁), block inversion, and gap
//! diagnostics between two operators in that topology.
//!
//! Explicit decompositions work in orthonormal coordinates of H₀ and H₁. Implicit ones
//! (large grids) keep every operator on the ambient space and realise a₀₀⁻¹ by a sparse
//! direct solve: a Galerkin system when H₀ = ran(G), a saddle-point system when
//! H₀ = ran(G)^⊥.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dense;
use crate::error::{Error, Result};
use crate::hilbert::{
    coercivity_check, operator_norm, random_vector, unitary_matrix, wot_gap_scale, Apply, CoercivityReport, HilbertSpace, LinearOp, ProbeSet,
    Subspace, SINGULAR_COND,
};
use crate::scalar::Scalar;
use crate::sparse::{CsrMatrix, SparseLu};

/// Orthogonal pair (H₀, H₁) with H₀ ⊕ H₁ = H.
#[derive(Clone, Debug)]
pub struct Decomposition<T: Scalar> {
    space: HilbertSpace<T>,
    h0: Subspace<T>,
    h1: Subspace<T>,
}

impl<T: Scalar> Decomposition<T> {
    /// H₁ := H₀^⊥.
    pub fn new(h0: Subspace<T>) -> Result<Self> {
        let h1 = h0.complement()?;
        Ok(Decomposition { space: h0.ambient().clone(), h0, h1 })
    }

    /// Checks orthogonality and completeness: cross Gram below 1e-8 and dimension count
    /// (explicit), or P₀ + P₁ = I and P₀P₁ = 0 on random probes to 1e-8 (implicit).
    pub fn from_pair(h0: Subspace<T>, h1: Subspace<T>) -> Result<Self> {
        let space = h0.ambient().clone();
        if !space.same(h1.ambient()) {
            return Err(Error::Shape("subspaces of different spaces".into()));
        }
        if h0.is_explicit() != h1.is_explicit() {
            return Err(Error::Invalid("explicit and implicit subspaces cannot be mixed".into()));
        }
        if let (Some(b0), Some(b1)) = (h0.basis(), h1.basis()) {
            let cross = dense::max_abs(&(b0.adjoint() * space.weight_matrix() * b1));
            if cross > 1e-8 {
                return Err(Error::Invalid(format!("subspaces are not orthogonal (cross Gram {cross:e})")));
            }
            if b0.ncols() + b1.ncols() != space.dim() {
                return Err(Error::Invalid("subspace dimensions do not add up".into()));
            }
        } else {
            let probes = ProbeSet::random(&space, 4, 17);
            for x in probes.vectors() {
                let p0 = h0.project(x);
                let p1 = h1.project(x);
                let d = space.norm(&(&p0 + &p1 - x));
                let c = space.norm(&h1.project(&p0));
                if d > 1e-8 || c > 1e-8 {
                    return Err(Error::Invalid(format!("projectors do not split the space ({d:e}, {c:e})")));
                }
            }
        }
        Ok(Decomposition { space, h0, h1 })
    }

    pub fn space(&self) -> &HilbertSpace<T> {
        &self.space
    }
    pub fn h0(&self) -> &Subspace<T> {
        &self.h0
    }
    pub fn h1(&self) -> &Subspace<T> {
        &self.h1
    }

    pub fn is_explicit(&self) -> bool {
        self.h0.is_explicit()
    }

    /// (H₁, H₀)
    pub fn swapped(&self) -> Self {
        Decomposition { space: self.space.clone(), h0: self.h1.clone(), h1: self.h0.clone() }
    }

    /// Probe sets for H₀ and H₁ obtained by projecting ambient probes.
    pub fn restrict_probes(&self, probes: &ProbeSet<T>) -> Result<(ProbeSet<T>, ProbeSet<T>)> {
        Ok((probes.restrict(&self.h0)?, probes.restrict(&self.h1)?))
    }
}

/// The four blocks a_jk = ι_j* a ι_k.
#[derive(Clone, Debug)]
pub struct Blocks<T: Scalar> {
    pub a00: LinearOp<T>,
    pub a01: LinearOp<T>,
    pub a10: LinearOp<T>,
    pub a11: LinearOp<T>,
}

/// Maps generating τ(H₀, H₁): a₀₀⁻¹, a₀₀⁻¹a₀₁, a₁₀a₀₀⁻¹ and a_S = a₁₁ − a₁₀a₀₀⁻¹a₀₁.
#[derive(Clone, Debug)]
pub struct SchurMaps<T: Scalar> {
    pub m00inv: LinearOp<T>,
    pub m01: LinearOp<T>,
    pub m10: LinearOp<T>,
    pub ms: LinearOp<T>,
}

fn check_square<T: Scalar>(a: &LinearOp<T>, dec: &Decomposition<T>) -> Result<()> {
    if !a.source().same(dec.space()) || !a.target().same(dec.space()) {
        return Err(Error::Shape("operator does not act on the decomposed space".into()));
    }
    Ok(())
}

fn apply_cols<T: Scalar>(a: &LinearOp<T>, b: &DMatrix<T>) -> DMatrix<T> {
    if let Some(m) = a.as_dense() {
        return m * b;
    }
    let mut out = DMatrix::zeros(a.target().dim(), b.ncols());
    for j in 0..b.ncols() {
        out.set_column(j, &a.apply(&b.column(j).into_owned()));
    }
    out
}

fn explicit_blocks<T: Scalar>(a: &LinearOp<T>, dec: &Decomposition<T>) -> [DMatrix<T>; 4] {
    let w = dec.space.weight_matrix();
    let b0 = dec.h0.basis().expect("explicit");
    let b1 = dec.h1.basis().expect("explicit");
    let ab0 = apply_cols(a, b0);
    let ab1 = apply_cols(a, b1);
    let l0 = b0.adjoint() * &w;
    let l1 = b1.adjoint() * &w;
    [&l0 * &ab0, &l0 * &ab1, &l1 * &ab0, &l1 * &ab1]
}

pub fn blocks<T: Scalar>(a: &LinearOp<T>, dec: &Decomposition<T>) -> Result<Blocks<T>> {
    check_square(a, dec)?;
    if dec.is_explicit() {
        let [m00, m01, m10, m11] = explicit_blocks(a, dec);
        let (s0, s1) = (dec.h0.op_space(), dec.h1.op_space());
        Ok(Blocks {
            a00: LinearOp::dense(s0, s0, m00)?,
            a01: LinearOp::dense(s1, s0, m01)?,
            a10: LinearOp::dense(s0, s1, m10)?,
            a11: LinearOp::dense(s1, s1, m11)?,
        })
    } else {
        let (p0, p1) = (dec.h0.projector(), dec.h1.projector());
        Ok(Blocks {
            a00: p0.compose(&a.compose(&p0)?)?,
            a01: p0.compose(&a.compose(&p1)?)?,
            a10: p1.compose(&a.compose(&p0)?)?,
            a11: p1.compose(&a.compose(&p1)?)?,
        })
    }
}

fn cond<T: Scalar>(m: &DMatrix<T>) -> Result<f64> {
    if m.nrows() == 0 {
        Ok(1.0)
    } else {
        dense::condition_number(m)
    }
}

pub fn schur_maps<T: Scalar>(a: &LinearOp<T>, dec: &Decomposition<T>) -> Result<SchurMaps<T>> {
    check_square(a, dec)?;
    if dec.is_explicit() {
        explicit_maps(a, dec)
    } else {
        implicit_maps(a, dec)
    }
}

fn explicit_maps<T: Scalar>(a: &LinearOp<T>, dec: &Decomposition<T>) -> Result<SchurMaps<T>> {
    let ca = cond(&unitary_matrix(a))?;
    if ca > SINGULAR_COND {
        return Err(Error::NotInM(format!("a is numerically singular (condition {ca:e})")));
    }
    let [a00, a01, a10, a11] = explicit_blocks(a, dec);
    let c00 = cond(&a00)?;
    if c00 > SINGULAR_COND {
        return Err(Error::NotInM(format!("a00 is numerically singular (condition {c00:e})")));
    }
    let inv = dense::inverse(&a00)?;
    let m01 = &inv * &a01;
    let m10 = &a10 * &inv;
    let ms = &a11 - &a10 * &m01;
    let (s0, s1) = (dec.h0.op_space(), dec.h1.op_space());
    Ok(SchurMaps {
        m00inv: LinearOp::dense(s0, s0, inv)?,
        m01: LinearOp::dense(s1, s0, m01)?,
        m10: LinearOp::dense(s0, s1, m10)?,
        ms: LinearOp::dense(s1, s1, ms)?,
    })
}

/// Solver for a₀₀ on an implicit H₀; both solves return elements of H₀.
struct A00Solver<T: Scalar> {
    space: HilbertSpace<T>,
    kind: A00Kind<T>,
}

enum A00Kind<T: Scalar> {
    /// H₀ = ran(G): K = GᴴWaG.
    Galerkin { g: CsrMatrix<T>, gh_w: CsrMatrix<T>, k: Option<SparseLu<T>> },
    /// H₀ = ran(G)^⊥: [[a, −G], [GᴴW, 0]].
    Saddle { n: usize, p: usize, s: SparseLu<T> },
}

impl<T: Scalar> A00Solver<T> {
    fn new(a: &CsrMatrix<T>, h0: &Subspace<T>) -> Result<Self> {
        let (gen, complement) = h0.generator().expect("implicit subspace");
        let g = gen.matrix().clone();
        let gh_w = gen.gh_w().clone();
        let singular = |_| Error::NotInM("a00 is singular".into());
        let kind = if !complement {
            let k = if g.ncols() == 0 { None } else { Some(gh_w.matmul(a).matmul(&g).lu().map_err(singular)?) };
            A00Kind::Galerkin { g, gh_w, k }
        } else {
            let (n, p) = (g.nrows(), g.ncols());
            let neg_g = g.scale(-T::one());
            let s = CsrMatrix::block(&[n, p], &[n, p], &[(0, 0, a), (0, 1, &neg_g), (1, 0, &gh_w)]);
            A00Kind::Saddle { n, p, s: s.lu().map_err(singular)? }
        };
        Ok(A00Solver { space: h0.ambient().clone(), kind })
    }

    fn solve(&self, r: &DVector<T>) -> DVector<T> {
        match &self.kind {
            A00Kind::Galerkin { g, gh_w, k } => match k {
                None => DVector::zeros(r.len()),
                Some(k) => g.mul_vec(&k.solve(&gh_w.mul_vec(r))),
            },
            A00Kind::Saddle { n, p, s } => {
                let mut rhs = DVector::zeros(n + p);
                rhs.rows_mut(0, *n).copy_from(r);
                s.solve(&rhs).rows(0, *n).into_owned()
            }
        }
    }

    /// W-adjoint of [`Self::solve`].
    fn solve_adjoint(&self, y: &DVector<T>) -> DVector<T> {
        match &self.kind {
            A00Kind::Galerkin { g, gh_w, k } => match k {
                None => DVector::zeros(y.len()),
                Some(k) => g.mul_vec(&k.solve_adjoint(&gh_w.mul_vec(y))),
            },
            A00Kind::Saddle { n, p, s } => {
                let mut rhs = DVector::zeros(n + p);
                rhs.rows_mut(0, *n).copy_from(&self.space.apply_weight(y));
                self.space.solve_weight(&s.solve_adjoint(&rhs).rows(0, *n).into_owned())
            }
        }
    }
}

fn implicit_maps<T: Scalar>(a: &LinearOp<T>, dec: &Decomposition<T>) -> Result<SchurMaps<T>> {
    let sa = a
        .to_sparse()
        .ok_or_else(|| Error::Invalid("implicit decompositions need an assembled operator".into()))?;
    sa.lu().map_err(|_| Error::NotInM("a is singular".into()))?;
    let solver = Arc::new(A00Solver::new(&sa, &dec.h0)?);
    let space = dec.space.clone();
    let (s1, s2) = (solver.clone(), solver);
    let fwd: Apply<T> = Arc::new(move |x: &DVector<T>| s1.solve(x));
    let adj: Apply<T> = Arc::new(move |y: &DVector<T>| s2.solve_adjoint(y));
    let m00inv = LinearOp::from_fn_adjoint(&space, &space, fwd, Some(adj));
    let b = blocks(a, dec)?;
    let m01 = m00inv.compose(&b.a01)?;
    let m10 = b.a10.compose(&m00inv)?;
    let ms = b.a11.sub(&b.a10.compose(&m01)?)?;
    Ok(SchurMaps { m00inv, m01, m10, ms })
}

/// a⁻¹ assembled from the block formula
/// [[a₀₀⁻¹ + a₀₀⁻¹a₀₁ a_S⁻¹ a₁₀a₀₀⁻¹, −a₀₀⁻¹a₀₁ a_S⁻¹], [−a_S⁻¹ a₁₀a₀₀⁻¹, a_S⁻¹]].
pub fn block_inverse<T: Scalar>(a: &LinearOp<T>, dec: &Decomposition<T>) -> Result<LinearOp<T>> {
    if !dec.is_explicit() {
        return Err(Error::TooLarge("block inverse needs explicit bases".into()));
    }
    let m = schur_maps(a, dec)?;
    let (inv00, m01, m10, ms) = (m.m00inv.to_dense(), m.m01.to_dense(), m.m10.to_dense(), m.ms.to_dense());
    let cs = cond(&ms)?;
    if cs > SINGULAR_COND {
        return Err(Error::NotInM(format!("Schur complement is numerically singular (condition {cs:e})")));
    }
    let s_inv = dense::inverse(&ms)?;
    let x00 = &inv00 + &m01 * &s_inv * &m10;
    let x01 = -(&m01 * &s_inv);
    let x10 = -(&s_inv * &m10);
    let x11 = s_inv;
    let w = dec.space.weight_matrix();
    let b0 = dec.h0.basis().unwrap();
    let b1 = dec.h1.basis().unwrap();
    let l0 = b0.adjoint() * &w;
    let l1 = b1.adjoint() * &w;
    let full = b0 * (&x00 * &l0 + &x01 * &l1) + b1 * (&x10 * &l0 + &x11 * &l1);
    LinearOp::dense(&dec.space, &dec.space, full)
}

/// Coercivity of a_S; whenever a ∈ 𝓕(α, β) this must pass as well.
pub fn schur_complement_coercivity<T: Scalar>(
    a: &LinearOp<T>,
    dec: &Decomposition<T>,
    alpha: f64,
    beta: f64,
) -> Result<CoercivityReport> {
    coercivity_check(&schur_maps(a, dec)?.ms, alpha, beta)
}

/// Four WOT gaps between the Schur maps of two operators.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TauGap {
    pub m00inv: f64,
    pub m01: f64,
    pub m10: f64,
    pub ms: f64,
}

impl TauGap {
    pub fn max(&self) -> f64 {
        self.m00inv.max(self.m01).max(self.m10).max(self.ms)
    }
    pub fn as_array(&self) -> [f64; 4] {
        [self.m00inv, self.m01, self.m10, self.ms]
    }
}

fn gap_scale<T: Scalar>(s: &LinearOp<T>, t: &LinearOp<T>, l: &ProbeSet<T>, r: &ProbeSet<T>) -> Result<(f64, f64)> {
    if l.is_empty() || r.is_empty() {
        return Ok((0.0, 0.0));
    }
    wot_gap_scale(s, t, l, r)
}

/// Reference maps whose pairings fall below this fraction of the largest of the four are
/// treated as zero and their gaps measured against that largest scale.
const ZERO_MAP: f64 = 1e-6;

fn tau_from_maps<T: Scalar>(
    ma: &SchurMaps<T>,
    mb: &SchurMaps<T>,
    p0: &ProbeSet<T>,
    p1: &ProbeSet<T>,
    rel: bool,
) -> Result<TauGap> {
    let g = [
        gap_scale(&ma.m00inv, &mb.m00inv, p0, p0)?,
        gap_scale(&ma.m01, &mb.m01, p0, p1)?,
        gap_scale(&ma.m10, &mb.m10, p1, p0)?,
        gap_scale(&ma.ms, &mb.ms, p1, p1)?,
    ];
    let top = g.iter().map(|x| x.1).fold(0.0, f64::max);
    let norm = |(gap, scale): (f64, f64)| {
        if !rel || top == 0.0 {
            gap
        } else if scale >= ZERO_MAP * top {
            gap / scale
        } else {
            gap / top
        }
    };
    Ok(TauGap { m00inv: norm(g[0]), m01: norm(g[1]), m10: norm(g[2]), ms: norm(g[3]) })
}

/// WOT gaps of the four Schur maps of `a` against those of `b`; `probes0`, `probes1`
/// live in the operator spaces of H₀ and H₁ (see [`ProbeSet::restrict`]).
pub fn tau_gap<T: Scalar>(
    a: &LinearOp<T>,
    b: &LinearOp<T>,
    dec: &Decomposition<T>,
    probes0: &ProbeSet<T>,
    probes1: &ProbeSet<T>,
) -> Result<TauGap> {
    tau_from_maps(&schur_maps(a, dec)?, &schur_maps(b, dec)?, probes0, probes1, false)
}

/// As [`tau_gap`], each component divided by the probe scale of the reference `b`'s map
/// (or by the largest of the four scales when that map is numerically zero).
pub fn tau_gap_relative<T: Scalar>(
    a: &LinearOp<T>,
    b: &LinearOp<T>,
    dec: &Decomposition<T>,
    probes0: &ProbeSet<T>,
    probes1: &ProbeSet<T>,
) -> Result<TauGap> {
    tau_from_maps(&schur_maps(a, dec)?, &schur_maps(b, dec)?, probes0, probes1, true)
}

/// Gaps between precomputed maps (lets sequences reuse the limit's factorisations).
pub fn tau_gap_maps<T: Scalar>(
    ma: &SchurMaps<T>,
    mb: &SchurMaps<T>,
    probes0: &ProbeSet<T>,
    probes1: &ProbeSet<T>,
    relative: bool,
) -> Result<TauGap> {
    tau_from_maps(ma, mb, probes0, probes1, relative)
}

#[derive(Clone, Debug)]
pub struct SwapReport {
    /// Max-entry defects of (m00inv, m01, m10, ms) of a⁻¹ on (H₁, H₀) against
    /// (a_S, −a₁₀a₀₀⁻¹, −a₀₀⁻¹a₀₁, a₀₀⁻¹) of a on (H₀, H₁).
    pub defects: [f64; 4],
    pub passes: bool,
}

/// Checks that inversion maps the Schur data of a to that of a⁻¹ on the swapped splitting.
pub fn inversion_swap_check<T: Scalar>(a: &LinearOp<T>, dec: &Decomposition<T>, tol: f64) -> Result<SwapReport> {
    if !dec.is_explicit() {
        return Err(Error::TooLarge("inversion swap check needs explicit bases".into()));
    }
    let inv = LinearOp::dense(&dec.space, &dec.space, dense::inverse(&a.to_dense())?)?;
    let m = schur_maps(a, dec)?;
    let mi = schur_maps(&inv, &dec.swapped())?;
    let pairs = [
        (mi.m00inv.to_dense(), m.ms.to_dense()),
        (mi.m01.to_dense(), -m.m10.to_dense()),
        (mi.m10.to_dense(), -m.m01.to_dense()),
        (mi.ms.to_dense(), m.m00inv.to_dense()),
    ];
    let mut defects = [0.0; 4];
    let mut passes = true;
    for (k, (x, y)) in pairs.iter().enumerate() {
        defects[k] = dense::max_abs(&(x - y));
        passes &= defects[k] <= tol * dense::max_abs(y).max(1.0);
    }
    Ok(SwapReport { defects, passes })
}

/// (H₀ ⊕ 𝓚, H₁ ∩ 𝓚^⊥) for a small explicit 𝓚 ⊆ H₁.
pub fn finite_shuffle<T: Scalar>(dec: &Decomposition<T>, k: &Subspace<T>) -> Result<Decomposition<T>> {
    let (Some(b0), Some(kb)) = (dec.h0.basis(), k.basis()) else {
        return Err(Error::Invalid("finite shuffle needs explicit bases".into()));
    };
    if kb.ncols() == 0 {
        return Ok(dec.clone());
    }
    for j in 0..kb.ncols() {
        let v = kb.column(j).into_owned();
        let off = dec.space.norm(&(&v - dec.h1.project(&v)));
        if off > 1e-8 {
            return Err(Error::Invalid(format!("shuffled subspace leaves H1 (defect {off:e})")));
        }
    }
    let mut joined = DMatrix::zeros(dec.space.dim(), b0.ncols() + kb.ncols());
    joined.columns_mut(0, b0.ncols()).copy_from(b0);
    joined.columns_mut(b0.ncols(), kb.ncols()).copy_from(kb);
    let h0 = Subspace::span(&dec.space, &joined, 1e-10)?;
    Decomposition::new(h0)
}

/// Seeded random decomposition with dim H₀ = k (explicit).
pub fn random_decomposition<T: Scalar>(space: &HilbertSpace<T>, k: usize, seed: u64) -> Result<Decomposition<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v = DMatrix::zeros(space.dim(), k);
    for j in 0..k {
        v.set_column(j, &random_vector::<T>(space.dim(), &mut rng));
    }
    Decomposition::new(Subspace::span(space, &v, 1e-10)?)
}

/// Membership of `a` in 𝓕(α; H₀, H₁) with α = [[α₀₀, α₀₁], [α₁₀, α₁₁]]. The pair
/// (α₀₀, α₁₁) bounds both T₀₀ and the Schur complement, exactly as the set is written;
/// `diagonal_pair_reused` records that the off-diagonal entries never enter those checks.
#[derive(Clone, Debug)]
pub struct CompSchurReport {
    pub t00: CoercivityReport,
    pub ms: CoercivityReport,
    /// ‖T₁₀T₀₀⁻¹‖ and ‖T₀₀⁻¹T₀₁‖.
    pub m10_norm: f64,
    pub m01_norm: f64,
    pub alpha: [[f64; 2]; 2],
    pub diagonal_pair_reused: bool,
}

impl CompSchurReport {
    pub fn passes(&self) -> bool {
        let slack = |b: f64| b * (1.0 + 1e-9);
        self.t00.passes()
            && self.ms.passes()
            && self.m10_norm <= slack(self.alpha[1][0])
            && self.m01_norm <= slack(self.alpha[0][1])
    }
}

pub fn comp_schur_membership<T: Scalar>(
    a: &LinearOp<T>,
    dec: &Decomposition<T>,
    alpha: [[f64; 2]; 2],
) -> Result<CompSchurReport> {
    if alpha.iter().flatten().any(|&x| !(x > 0.0)) {
        return Err(Error::Invalid("all four alpha entries must be positive".into()));
    }
    let (lo, hi) = (alpha[0][0], alpha[1][1]);
    if lo > hi {
        return Err(Error::Invalid(format!("need alpha00 <= alpha11, got ({lo}, {hi})")));
    }
    let b = blocks(a, dec)?;
    let m = schur_maps(a, dec)?;
    Ok(CompSchurReport {
        t00: coercivity_check(&b.a00, lo, hi)?,
        ms: coercivity_check(&m.ms, lo, hi)?,
        m10_norm: operator_norm(&m.m10)?,
        m01_norm: operator_norm(&m.m01)?,
        alpha,
        diagonal_pair_reused: true,
    })
}
