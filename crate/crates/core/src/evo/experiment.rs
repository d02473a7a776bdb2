use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::resolvent::resolvent;
use super::skew::{block_diagonal, skew_from_blocks, skew_split, SkewOp};
use crate::elliptic::{scalar_probes, vector_probes, CoefficientField, DiscreteGradient, Flavor, GridDomain};
use crate::error::{Error, Result};
use crate::hilbert::{random_vector, relative_wot_gap, HilbertSpace, LinearOp, ProbeSet};
use crate::scalar::Scalar;
use crate::schur::{schur_maps, tau_gap_maps, TauGap};
use crate::sparse::CsrMatrix;

pub const SYNTHETIC_TOLERANCE: f64 = 1e-6;
pub const TWO_SCALE_TOLERANCE: f64 = 5e-2;

/// Gaps below this are treated as exact zeros when fitting slopes.
const FIT_FLOOR: f64 = 1e-14;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Regime {
    /// Finite-dimensional perturbations on a fixed space: WOT and norm convergence coincide.
    Synthetic,
    /// Grid-backed oscillating coefficients on refining meshes: only probe pairings converge.
    TwoScale,
}

impl Regime {
    pub fn name(&self) -> &'static str {
        match self {
            Regime::Synthetic => "synthetic",
            Regime::TwoScale => "two-scale",
        }
    }
    pub fn default_tolerance(&self) -> f64 {
        match self {
            Regime::Synthetic => SYNTHETIC_TOLERANCE,
            Regime::TwoScale => TWO_SCALE_TOLERANCE,
        }
    }
}

/// One member of a sequence together with its reference limit (both may live on an
/// n-dependent mesh).
pub struct EvoInstance<T: Scalar> {
    pub a: SkewOp<T>,
    pub t_n: LinearOp<T>,
    pub t: LinearOp<T>,
    pub probes: ProbeSet<T>,
    pub f: DVector<T>,
    /// Weakly convergent right-hand side with limit f.
    pub f_n: DVector<T>,
}

#[derive(Clone, Debug)]
pub struct EvoRow {
    pub n: usize,
    pub dim: usize,
    /// Relative gaps of the Schur maps w.r.t. (ker A, ran A).
    pub tau: TauGap,
    /// Relative WOT gap of (T_n + A)⁻¹ against (T + A)⁻¹.
    pub resolvent_gap: f64,
    /// ‖P_ran((T_n + A)⁻¹f_n − (T + A)⁻¹f)‖ / ‖P_ran (T + A)⁻¹f‖.
    pub strong_gap: f64,
}

#[derive(Clone, Debug)]
pub struct EvoReport {
    pub rows: Vec<EvoRow>,
    pub regime: Regime,
    pub tolerance: f64,
}

/// Least-squares slope of ln y against ln n, ignoring entries at the floor.
pub fn loglog_slope(n: &[usize], y: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = n.iter().zip(y).filter(|(_, &v)| v > FIT_FLOOR).map(|(&k, &v)| ((k as f64).ln(), v.ln())).collect();
    if pts.len() < 2 {
        return None;
    }
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

impl EvoReport {
    fn ns(&self) -> Vec<usize> {
        self.rows.iter().map(|r| r.n).collect()
    }
    pub fn tau_slope(&self) -> Option<f64> {
        loglog_slope(&self.ns(), &self.rows.iter().map(|r| r.tau.max()).collect::<Vec<_>>())
    }
    pub fn resolvent_slope(&self) -> Option<f64> {
        loglog_slope(&self.ns(), &self.rows.iter().map(|r| r.resolvent_gap).collect::<Vec<_>>())
    }
    pub fn strong_slope(&self) -> Option<f64> {
        loglog_slope(&self.ns(), &self.rows.iter().map(|r| r.strong_gap).collect::<Vec<_>>())
    }
    pub fn tau_converged(&self) -> bool {
        self.rows.last().map_or(false, |r| r.tau.max() < self.tolerance)
    }
    pub fn resolvent_converged(&self) -> bool {
        self.rows.last().map_or(false, |r| r.resolvent_gap < self.tolerance)
    }
    /// Both gap families end below tolerance, or neither does.
    pub fn passes(&self) -> bool {
        !self.rows.is_empty() && self.tau_converged() == self.resolvent_converged()
    }
    pub fn csv_header() -> &'static str {
        "n,tau_m00inv,tau_m01,tau_m10,tau_ms,resolvent_wot_gap,strong_gap"
    }
    pub fn csv_rows(&self) -> Vec<String> {
        self.rows
            .iter()
            .map(|r| {
                let t = r.tau.as_array();
                format!("{},{:e},{:e},{:e},{:e},{:e},{:e}", r.n, t[0], t[1], t[2], t[3], r.resolvent_gap, r.strong_gap)
            })
            .collect()
    }
}

fn row<T: Scalar>(n: usize, inst: &EvoInstance<T>) -> Result<EvoRow> {
    let h = inst.a.space();
    let dec = inst.a.decomposition();
    let (p0, p1) = dec.restrict_probes(&inst.probes)?;
    let tau = tau_gap_maps(&schur_maps(&inst.t_n, dec)?, &schur_maps(&inst.t, dec)?, &p0, &p1, true)?;
    let r_n = resolvent(&inst.t_n, &inst.a)?;
    let r = resolvent(&inst.t, &inst.a)?;
    let resolvent_gap = relative_wot_gap(&r_n, &r, &inst.probes, &inst.probes)?;
    let u = r.apply(&inst.f);
    let ran = inst.a.ran();
    let d = ran.project(&(r_n.apply(&inst.f_n) - &u));
    let scale = h.norm(&ran.project(&u));
    let strong_gap = if scale > 1e-12 { h.norm(&d) / scale } else { h.norm(&d) };
    Ok(EvoRow { n, dim: h.dim(), tau, resolvent_gap, strong_gap })
}

/// Tracks the τ(ker A, ran A) gaps of T_n → T jointly with the WOT gap of the resolvents,
/// plus strong convergence of (T_n + A)⁻¹f_n for weakly convergent f_n.
pub fn abstract_schur_experiment<T: Scalar>(
    n_list: &[usize],
    member: &(dyn Fn(usize) -> Result<EvoInstance<T>> + Sync),
    regime: Regime,
    tolerance: f64,
) -> Result<EvoReport> {
    if n_list.is_empty() {
        return Err(Error::Invalid("empty n list".into()));
    }
    let rows = n_list.par_iter().map(|&n| row(n, &member(n)?)).collect::<Result<Vec<_>>>()?;
    Ok(EvoReport { rows, regime, tolerance })
}

fn random_weights(dim: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..dim).map(|_| rng.gen_range(0.5..2.0)).collect()
}

fn random_matrix<T: Scalar>(r: usize, c: usize, rng: &mut ChaCha8Rng) -> DMatrix<T> {
    let v: DVector<T> = random_vector(r * c, rng);
    DMatrix::from_column_slice(r, c, v.as_slice())
}

/// Seeded W-skew operator W⁻¹RᴴKR with K = Y − Yᴴ of size `rank`, so ker has dimension
/// dim − rank (for real scalars `rank` should be even).
pub fn random_skew<T: Scalar>(space: &HilbertSpace<T>, rank: usize, seed: u64) -> Result<LinearOp<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = space.dim();
    let r: DMatrix<T> = random_matrix(rank, dim, &mut rng);
    let y: DMatrix<T> = random_matrix(rank, rank, &mut rng);
    let k = &y - y.adjoint();
    let s = r.adjoint() * k * r;
    let m = DMatrix::from_fn(dim, dim, |i, j| s[(i, j)] * T::of(1.0 / space_weight(space, i)));
    LinearOp::dense(space, space, m)
}

fn space_weight<T: Scalar>(space: &HilbertSpace<T>, i: usize) -> f64 {
    space.diag_weights().map_or(1.0, |w| w[i])
}

/// Seeded T = W⁻¹(P + Z) with P ≥ αW Hermitian and Z skew-Hermitian, so Re T ≥ α.
pub fn random_coefficient<T: Scalar>(space: &HilbertSpace<T>, alpha: f64, seed: u64) -> Result<LinearOp<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = space.dim();
    let x: DMatrix<T> = random_matrix(dim, dim, &mut rng);
    let y: DMatrix<T> = random_matrix(dim, dim, &mut rng);
    let wm = space.weight_matrix();
    let p = wm.scale(alpha) + (x.adjoint() * &x).unscale(dim as f64);
    let z = (&y - y.adjoint()).scale(0.5);
    let m = p + z;
    let out = DMatrix::from_fn(dim, dim, |i, j| m[(i, j)] * T::of(1.0 / space_weight(space, i)));
    LinearOp::dense(space, space, out)
}

/// Fixed-space fixture T_n = T + P/n, f_n = f + g/n with seeded data.
pub struct SyntheticFixture<T: Scalar> {
    pub a: SkewOp<T>,
    pub t: LinearOp<T>,
    pub p: LinearOp<T>,
    pub f: DVector<T>,
    pub g: DVector<T>,
    pub probes: ProbeSet<T>,
}

impl<T: Scalar> SyntheticFixture<T> {
    pub fn new(dim: usize, rank: usize, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let space = HilbertSpace::diagonal(random_weights(dim, &mut rng))?;
        let a = skew_split(&random_skew(&space, rank, seed ^ 0xa5a5)?)?;
        let alpha = 1.0;
        let t = random_coefficient(&space, alpha, seed ^ 0x0707)?;
        // ‖P‖ ≤ α/2 keeps every T_n coercive
        let x: DMatrix<T> = random_matrix(dim, dim, &mut rng);
        let scale = alpha / (4.0 * dim as f64);
        let pm = DMatrix::from_fn(dim, dim, |i, j| x[(i, j)] * T::of(scale / space_weight(&space, i)));
        let p = LinearOp::dense(&space, &space, pm)?;
        let f = random_vector(dim, &mut rng);
        let g = random_vector(dim, &mut rng);
        let probes = ProbeSet::random(&space, 6, seed ^ 0x3c3c);
        Ok(SyntheticFixture { a, t, p, f, g, probes })
    }

    pub fn member(&self, n: usize) -> Result<EvoInstance<T>> {
        let s = T::of(1.0 / n as f64);
        Ok(EvoInstance {
            a: self.a.clone(),
            t_n: self.t.add_scaled(s, &self.p)?,
            t: self.t.clone(),
            probes: self.probes.clone(),
            f: self.f.clone(),
            f_n: &self.f + &self.g * s,
        })
    }

    /// The member with T_n = T for every n.
    pub fn constant_member(&self) -> Result<EvoInstance<T>> {
        Ok(EvoInstance {
            a: self.a.clone(),
            t_n: self.t.clone(),
            t: self.t.clone(),
            probes: self.probes.clone(),
            f: self.f.clone(),
            f_n: self.f.clone(),
        })
    }
}

/// 10, 100, …, 10^7
pub fn synthetic_n_list() -> Vec<usize> {
    (1..=7).map(|k| 10usize.pow(k)).collect()
}

/// Mixed operator [[0, div], [grad₀, 0]] on L² ⊕ L² over (0, 1) with `cells` cells.
pub fn grad_div_operator(cells: usize) -> Result<(std::sync::Arc<DiscreteGradient<f64>>, SkewOp<f64>)> {
    let domain = GridDomain::unit(1, cells)?;
    let grad = DiscreteGradient::build(&domain, Flavor::Dirichlet)?;
    let g = grad.matrix().clone();
    let (_, op) = skew_from_blocks(&[grad.scalar_space(), grad.vector_space()], &[(1, 0, &g)])?;
    let gen = block_diagonal(&[&CsrMatrix::identity(grad.scalar_space().dim()), &g]);
    let a = SkewOp::with_range(&op, gen)?;
    Ok((grad, a))
}

/// Two-scale member: T_n = diag(1, 2 + sin 2πnx) on a mesh with `cells_per_period · n`
/// cells, limit T = diag(1, 2), f = (1, 0) and f_n = f + (sin 2πnx, 0).
pub fn two_scale_member(n: usize, cells_per_period: usize) -> Result<EvoInstance<f64>> {
    let (grad, a) = grad_div_operator(cells_per_period * n)?;
    let domain = grad.domain().clone();
    let ns = grad.scalar_space().dim();
    let a_n = CoefficientField::scalar(&domain, |x| 2.0 + (2.0 * PI * n as f64 * x[0]).sin())?.multiplier(&grad)?;
    let a_lim = CoefficientField::scalar(&domain, |_| 2.0)?.multiplier(&grad)?;
    let id = CsrMatrix::identity(ns);
    let h = a.space().clone();
    let t_n = LinearOp::sparse(&h, &h, block_diagonal(&[&id, a_n.as_sparse().expect("sparse multiplier")]))?;
    let t = LinearOp::sparse(&h, &h, block_diagonal(&[&id, a_lim.as_sparse().expect("sparse multiplier")]))?;
    let nv = grad.vector_space().dim();
    let sp = scalar_probes(&grad, 5)?;
    let vp = vector_probes(&grad, 5)?;
    let mut probes = Vec::new();
    for p in sp.vectors() {
        probes.push(DVector::from_iterator(ns + nv, p.iter().copied().chain(std::iter::repeat(0.0).take(nv))));
    }
    for q in vp.vectors() {
        probes.push(DVector::from_iterator(ns + nv, std::iter::repeat(0.0).take(ns).chain(q.iter().copied())));
    }
    let probes = ProbeSet::new(&h, probes)?;
    let one = grad.sample_scalar(|_| 1.0);
    let wobble = grad.sample_scalar(|x| (2.0 * PI * n as f64 * x[0]).sin());
    let f = DVector::from_iterator(ns + nv, one.iter().copied().chain(std::iter::repeat(0.0).take(nv)));
    let f_n = DVector::from_iterator(ns + nv, (one + wobble).iter().copied().chain(std::iter::repeat(0.0).take(nv)));
    Ok(EvoInstance { a, t_n, t, probes, f, f_n })
}

pub fn two_scale_n_list() -> Vec<usize> {
    vec![2, 4, 8, 16, 32]
}
