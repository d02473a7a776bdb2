use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use super::sequence::{budget, check_budget, CoefficientSequence, MeshRule};
use crate::elliptic::{
    default_modes, project_g0_1d, projected_inverse_1d, scalar_probes, sine_modes, vector_probes, CoefficientField,
    DiscreteGradient, EllipticSolver, Flavor, RhsFunctional,
};
use crate::error::{Error, Result};
use crate::hilbert::{wot_gap, HilbertSpace, LinearOp, ProbeSet};
use crate::scalar::Scalar;
use crate::schur::{schur_maps, tau_gap_maps, Decomposition, TauGap};
use crate::sparse::CsrMatrix;

/// Gaps at or below this level count as solver noise when checking monotonicity.
pub const NOISE: f64 = 1e-9;

pub fn default_n_list(d: usize) -> Vec<usize> {
    if d == 1 {
        vec![1, 2, 4, 8, 16, 32]
    } else {
        vec![1, 2, 4, 8, 16]
    }
}

/// Domain box, mesh rule, probes and tolerance of a two-parameter run.
#[derive(Clone, Debug)]
pub struct ExperimentOptions {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub rule: MeshRule,
    /// Sine modes per axis for the pairing probes.
    pub probe_modes: usize,
    /// Sine modes per axis for the Schur-map probes.
    pub tau_modes: usize,
    pub tolerance: f64,
    pub budget: usize,
}

impl ExperimentOptions {
    pub fn unit(d: usize) -> Self {
        ExperimentOptions {
            lo: vec![0.0; d],
            hi: vec![1.0; d],
            rule: MeshRule::default_for(d),
            probe_modes: default_modes(d),
            tau_modes: if d == 1 { 5 } else { 3 },
            tolerance: if d == 1 { 2e-2 } else { 5e-2 },
            budget: budget(),
        }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }
}

#[derive(Clone, Debug)]
pub struct HLimitRow<T: Scalar> {
    pub n: usize,
    /// Cells along x₁.
    pub cells: usize,
    pub h: f64,
    /// ⟨g_i, u_n⟩.
    pub pairings: Vec<T>,
    /// ⟨G_i, a_n grad u_n⟩.
    pub flux_pairings: Vec<T>,
    pub limit_pairings: Vec<T>,
    pub limit_flux_pairings: Vec<T>,
    /// max_i |⟨g_i, u_n − u⟩| / max_i |⟨g_i, u⟩|.
    pub solution_gap: f64,
    pub flux_gap: f64,
    pub tau: Option<TauGap>,
    pub residual: f64,
}

impl<T: Scalar> HLimitRow<T> {
    pub fn error(&self) -> f64 {
        self.solution_gap.max(self.flux_gap)
    }
}

#[derive(Clone, Debug)]
pub struct HLimitReport<T: Scalar> {
    pub rows: Vec<HLimitRow<T>>,
    pub cells_per_period: usize,
    pub probe_modes: usize,
    pub candidate: Option<DMatrix<T>>,
    /// Limits were extrapolated from the three largest n rather than solved for.
    pub estimated: bool,
    pub tolerance: f64,
}

fn decays(first: f64, last: f64) -> bool {
    last <= first.max(NOISE)
}

impl<T: Scalar> HLimitReport<T> {
    pub fn final_error(&self) -> f64 {
        self.rows.last().map_or(f64::NAN, |r| r.error())
    }

    /// Final pairing error below tolerance and no larger than the first.
    pub fn passes(&self) -> bool {
        match (self.rows.first(), self.rows.last()) {
            (Some(f), Some(l)) => l.error() < self.tolerance && decays(f.error(), l.error()),
            _ => false,
        }
    }

    pub fn final_tau(&self) -> Option<TauGap> {
        self.rows.last().and_then(|r| r.tau)
    }

    pub fn tau_passes(&self) -> bool {
        match (self.rows.first().and_then(|r| r.tau), self.final_tau()) {
            (Some(f), Some(l)) => l.max() < self.tolerance && decays(f.max(), l.max()),
            _ => false,
        }
    }

    /// Schur gaps and solution-operator gap vanish together.
    pub fn joint_passes(&self) -> bool {
        self.passes() && self.tau_passes()
    }
}

fn rel_gap<T: Scalar>(x: &[T], lim: &[T]) -> f64 {
    let scale = lim.iter().map(|v| v.abs_val()).fold(0.0, f64::max);
    let diff = x.iter().zip(lim).map(|(a, b)| (*a - *b).abs_val()).fold(0.0, f64::max);
    if scale > 0.0 {
        diff / scale
    } else {
        diff
    }
}

/// Aitken Δ² extrapolation of three successive values (the last one when the
/// second difference vanishes).
fn aitken<T: Scalar>(x0: T, x1: T, x2: T) -> T {
    let d1 = x2 - x1;
    let dd = d1 - (x1 - x0);
    if dd.abs_val() <= 1e-14 * x2.abs_val().max(1e-300) {
        return x2;
    }
    x2 - d1 * d1 / dd
}

struct Solved<T: Scalar> {
    row: HLimitRow<T>,
}

fn pair<T: Scalar>(space: &HilbertSpace<T>, probes: &ProbeSet<T>, v: &DVector<T>) -> Vec<T> {
    probes.vectors().iter().map(|g| space.inner(g, v)).collect()
}

fn run_n<T: Scalar>(
    seq: &CoefficientSequence<T>,
    f: &(dyn Fn(&[f64]) -> T + Sync),
    candidate: Option<&DMatrix<T>>,
    n: usize,
    opts: &ExperimentOptions,
    with_tau: bool,
) -> Result<Solved<T>> {
    let domain = opts.rule.grid(&opts.lo, &opts.hi, n)?;
    check_budget(&domain, opts.budget)?;
    let grad = DiscreteGradient::build(&domain, Flavor::Dirichlet)?;
    let a_n = seq.field(n, &domain)?;
    let rhs = RhsFunctional::density(&grad, f);
    let sol = EllipticSolver::new(&grad, &a_n)?.solve(&rhs)?;
    let sp = scalar_probes(&grad, opts.probe_modes)?;
    let vp = vector_probes(&grad, opts.probe_modes)?;
    let pairings = pair(grad.scalar_space(), &sp, &sol.u);
    let flux_pairings = pair(grad.vector_space(), &vp, &sol.q);
    let mut residual = sol.residual;
    let (mut limit_pairings, mut limit_flux_pairings) = (Vec::new(), Vec::new());
    let mut tau = None;
    if let Some(m) = candidate {
        let a = CoefficientField::constant(&domain, m.clone())?;
        let s = EllipticSolver::new(&grad, &a)?.solve(&rhs)?;
        residual = residual.max(s.residual);
        limit_pairings = pair(grad.scalar_space(), &sp, &s.u);
        limit_flux_pairings = pair(grad.vector_space(), &vp, &s.q);
        if with_tau {
            tau = Some(schur_gaps(&grad, &a_n, &a, opts.tau_modes)?);
        }
    }
    let (solution_gap, flux_gap) = if candidate.is_some() {
        (rel_gap(&pairings, &limit_pairings), rel_gap(&flux_pairings, &limit_flux_pairings))
    } else {
        (f64::NAN, f64::NAN)
    };
    Ok(Solved {
        row: HLimitRow {
            n,
            cells: domain.cells()[0],
            h: domain.h(0),
            pairings,
            flux_pairings,
            limit_pairings,
            limit_flux_pairings,
            solution_gap,
            flux_gap,
            tau,
            residual,
        },
    })
}

/// Relative τ(g₀, g₀^⊥) gaps of the multiplier a_n against the candidate a on one grid.
fn schur_gaps<T: Scalar>(
    grad: &Arc<DiscreteGradient<T>>,
    a_n: &CoefficientField<T>,
    a: &CoefficientField<T>,
    modes: usize,
) -> Result<TauGap> {
    let dec = Decomposition::new(grad.range_subspace()?)?;
    let probes = vector_probes(grad, modes)?;
    let (p0, p1) = dec.restrict_probes(&probes)?;
    let ma = schur_maps(&a_n.multiplier(grad)?, &dec)?;
    let mb = schur_maps(&a.multiplier(grad)?, &dec)?;
    tau_gap_maps(&ma, &mb, &p0, &p1, true)
}

fn run<T: Scalar>(
    seq: &CoefficientSequence<T>,
    f: &(dyn Fn(&[f64]) -> T + Sync),
    candidate: Option<&DMatrix<T>>,
    n_list: &[usize],
    opts: &ExperimentOptions,
    with_tau: bool,
) -> Result<HLimitReport<T>> {
    if n_list.is_empty() {
        return Err(Error::Invalid("empty n list".into()));
    }
    let mut ns = n_list.to_vec();
    ns.sort_unstable();
    ns.dedup();
    // Refuse the whole run up front rather than after the small-n solves.
    for &n in &ns {
        check_budget(&opts.rule.grid(&opts.lo, &opts.hi, n)?, opts.budget)?;
    }
    let solved: Vec<Result<Solved<T>>> = ns.par_iter().map(|&n| run_n(seq, f, candidate, n, opts, with_tau)).collect();
    let mut rows = Vec::with_capacity(ns.len());
    for s in solved {
        rows.push(s?.row);
    }
    let estimated = candidate.is_none();
    if estimated {
        if rows.len() < 3 {
            return Err(Error::Invalid("extrapolating the limit needs at least three values of n".into()));
        }
        let k = rows.len();
        let ext = |get: &dyn Fn(&HLimitRow<T>) -> &Vec<T>| -> Vec<T> {
            let (a, b, c) = (get(&rows[k - 3]), get(&rows[k - 2]), get(&rows[k - 1]));
            (0..c.len()).map(|i| aitken(a[i], b[i], c[i])).collect()
        };
        let lp = ext(&|r| &r.pairings);
        let lf = ext(&|r| &r.flux_pairings);
        for r in rows.iter_mut() {
            r.solution_gap = rel_gap(&r.pairings, &lp);
            r.flux_gap = rel_gap(&r.flux_pairings, &lf);
            r.limit_pairings = lp.clone();
            r.limit_flux_pairings = lf.clone();
        }
    }
    Ok(HLimitReport {
        rows,
        cells_per_period: opts.rule.cells_per_period,
        probe_modes: opts.probe_modes,
        candidate: candidate.cloned(),
        estimated,
        tolerance: opts.tolerance,
    })
}

/// Solves −div a_n grad u_n = f and −div a grad u = f on the Dirichlet grid of each n and
/// compares probe pairings of u_n and of a_n grad u_n with those of the candidate. Without a
/// candidate the limit pairings are extrapolated and the report is flagged as an estimate.
pub fn hconvergence_experiment<T: Scalar>(
    seq: &CoefficientSequence<T>,
    f: &(dyn Fn(&[f64]) -> T + Sync),
    candidate: Option<&DMatrix<T>>,
    n_list: &[usize],
    opts: &ExperimentOptions,
) -> Result<HLimitReport<T>> {
    run(seq, f, candidate, n_list, opts, false)
}

/// hconvergence_experiment with the relative τ(g₀, g₀^⊥) gaps of each a_n against the
/// candidate added to every row.
pub fn schur_equiv_check<T: Scalar>(
    seq: &CoefficientSequence<T>,
    f: &(dyn Fn(&[f64]) -> T + Sync),
    candidate: &DMatrix<T>,
    n_list: &[usize],
    opts: &ExperimentOptions,
) -> Result<HLimitReport<T>> {
    run(seq, f, Some(candidate), n_list, opts, true)
}

#[derive(Clone, Debug)]
pub struct AdjointReport<T: Scalar> {
    pub primal: HLimitReport<T>,
    pub adjoint: HLimitReport<T>,
}

impl<T: Scalar> AdjointReport<T> {
    /// The adjoint run decays whenever the primal one does.
    pub fn passes(&self) -> bool {
        !self.primal.joint_passes() || self.adjoint.joint_passes()
    }

    /// Largest difference between corresponding gaps of the two runs.
    pub fn max_difference(&self) -> f64 {
        self.primal
            .rows
            .iter()
            .zip(&self.adjoint.rows)
            .map(|(p, a)| {
                let t = match (p.tau, a.tau) {
                    (Some(x), Some(y)) => {
                        x.as_array().iter().zip(y.as_array()).map(|(u, v)| (u - v).abs()).fold(0.0, f64::max)
                    }
                    _ => 0.0,
                };
                t.max((p.solution_gap - a.solution_gap).abs()).max((p.flux_gap - a.flux_gap).abs())
            })
            .fold(0.0, f64::max)
    }
}

/// schur_equiv_check for (a_n) against a and for (a_n*) against a*.
pub fn adjoint_symmetry_check<T: Scalar>(
    seq: &CoefficientSequence<T>,
    f: &(dyn Fn(&[f64]) -> T + Sync),
    candidate: &DMatrix<T>,
    n_list: &[usize],
    opts: &ExperimentOptions,
) -> Result<AdjointReport<T>> {
    let primal = schur_equiv_check(seq, f, candidate, n_list, opts)?;
    let adjoint = schur_equiv_check(&seq.adjoint(), f, &candidate.adjoint(), n_list, opts)?;
    Ok(AdjointReport { primal, adjoint })
}

#[derive(Clone, Debug)]
pub struct QdindRow {
    pub n: usize,
    /// WOT gap of a_n⁻¹ against α_h⁻¹ as multiplication operators on L².
    pub multiplier_gap: f64,
    /// (ι*a_nι)⁻¹ against (ι*α_hι)⁻¹ on g₀.
    pub inverse_gap: f64,
    /// a_nι(ι*a_nι)⁻¹ against α_hι(ι*α_hι)⁻¹ from g₀ to L².
    pub flux_gap: f64,
}

#[derive(Clone, Debug)]
pub struct QdindReport<T: Scalar> {
    pub rows: Vec<QdindRow>,
    pub harmonic: T,
    pub arithmetic: T,
    /// Smallest Pearson coefficient between log multiplier gaps and each family of log
    /// Schur-side gaps; `None` when the gaps are at noise level.
    pub correlation: Option<f64>,
}

impl<T: Scalar> QdindReport<T> {
    pub fn all_vanish(&self) -> bool {
        self.rows.iter().all(|r| r.multiplier_gap.max(r.inverse_gap).max(r.flux_gap) <= NOISE)
    }

    /// Both families decay from first to last n and their logs correlate above 0.9.
    pub fn passes(&self) -> bool {
        if self.all_vanish() {
            return true;
        }
        let (f, l) = (&self.rows[0], &self.rows[self.rows.len() - 1]);
        l.multiplier_gap < f.multiplier_gap
            && l.inverse_gap.max(l.flux_gap) < f.inverse_gap.max(f.flux_gap)
            && self.correlation.is_some_and(|c| c > 0.9)
    }
}

pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    if x.len() != y.len() || x.len() < 2 {
        return None;
    }
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some(sxy / (sxx * syy).sqrt())
}

fn diag_op<T: Scalar>(space: &HilbertSpace<T>, d: &[T]) -> Result<LinearOp<T>> {
    LinearOp::sparse(space, space, CsrMatrix::diagonal(d))
}

fn qdind_row<T: Scalar>(seq: &CoefficientSequence<T>, ah: T, n: usize, opts: &ExperimentOptions) -> Result<QdindRow> {
    let domain = opts.rule.grid(&[0.0], &[1.0], n)?;
    check_budget(&domain, opts.budget)?;
    let field = seq.field(n, &domain)?;
    let a: Vec<T> = field.cells().iter().map(|m| m[(0, 0)]).collect();
    let cells = a.len();
    let h = domain.h(0);
    let space = HilbertSpace::diagonal(vec![h; cells])?;
    let centers: Vec<Vec<f64>> = (0..cells).map(|c| domain.cell_center(c)).collect();
    let l2: Vec<DVector<T>> = sine_modes(&domain, opts.probe_modes)
        .iter()
        .map(|m| DVector::from_iterator(cells, centers.iter().map(|x| T::of(m(x)))))
        .collect();
    let g0: Vec<DVector<T>> = l2.iter().map(|p| project_g0_1d(p, 0.0, 1.0)).filter(|p| p.camax() > 1e-10).collect();
    let l2 = ProbeSet::new(&space, l2)?;
    let g0 = ProbeSet::new(&space, g0)?;

    let inv_n: Vec<T> = a.iter().map(|&x| T::one() / x).collect();
    let multiplier_gap = wot_gap(&diag_op(&space, &inv_n)?, &diag_op(&space, &vec![T::one() / ah; cells])?, &l2, &l2)?;

    let a_arc = Arc::new(a);
    let (a1, a2) = (a_arc.clone(), a_arc.clone());
    let pinv_n = LinearOp::from_fn(
        &space,
        &space,
        Arc::new(move |x: &DVector<T>| {
            projected_inverse_1d(&a1, &project_g0_1d(x, 0.0, 1.0)).expect("coercive coefficient has nonzero harmonic mean")
        }),
        None,
    );
    let flux_n = LinearOp::from_fn(
        &space,
        &space,
        Arc::new(move |x: &DVector<T>| {
            let p = projected_inverse_1d(&a2, &project_g0_1d(x, 0.0, 1.0)).expect("coercive coefficient has nonzero harmonic mean");
            DVector::from_iterator(p.len(), p.iter().zip(a2.iter()).map(|(v, c)| *v * *c))
        }),
        None,
    );
    // For the constant α_h: (ι*α_hι)⁻¹ψ = ψ/α_h and α_hι(ι*α_hι)⁻¹ψ = ψ on g₀.
    let pinv = LinearOp::from_fn(&space, &space, Arc::new(move |x: &DVector<T>| project_g0_1d(x, 0.0, 1.0) / ah), None);
    let flux = LinearOp::from_fn(&space, &space, Arc::new(|x: &DVector<T>| project_g0_1d(x, 0.0, 1.0)), None);
    Ok(QdindRow {
        n,
        multiplier_gap,
        inverse_gap: wot_gap(&pinv_n, &pinv, &g0, &g0)?,
        flux_gap: wot_gap(&flux_n, &flux, &l2, &g0)?,
    })
}

/// For a 1D laminate sequence: the WOT gap of a_n⁻¹ against the harmonic-mean limit next to
/// the two Schur-side gaps on g₀ = {1}^⊥ ⊂ L²(0,1).
pub fn qdind_check<T: Scalar>(seq: &CoefficientSequence<T>, n_list: &[usize], opts: &ExperimentOptions) -> Result<QdindReport<T>> {
    let profile = seq
        .profile()
        .ok_or_else(|| Error::Invalid("qdind_check needs a one-dimensional laminate profile".into()))?
        .clone();
    if n_list.is_empty() {
        return Err(Error::Invalid("empty n list".into()));
    }
    let (harmonic, arithmetic) = super::limits::laminate_limit(|y| profile(y))?;
    let mut ns = n_list.to_vec();
    ns.sort_unstable();
    ns.dedup();
    let rows = ns.par_iter().map(|&n| qdind_row(seq, harmonic, n, opts)).collect::<Result<Vec<_>>>()?;
    let logs = |f: &dyn Fn(&QdindRow) -> f64| -> Option<Vec<f64>> {
        rows.iter().map(|r| f(r)).map(|g| (g > NOISE).then(|| g.ln())).collect()
    };
    let correlation = match (logs(&|r| r.multiplier_gap), logs(&|r| r.inverse_gap), logs(&|r| r.flux_gap)) {
        (Some(m), Some(i), Some(fl)) => match (pearson(&m, &i), pearson(&m, &fl)) {
            (Some(c1), Some(c2)) => Some(c1.min(c2)),
            _ => None,
        },
        _ => None,
    };
    Ok(QdindReport { rows, harmonic, arithmetic, correlation })
}
