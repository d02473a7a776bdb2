use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::elliptic::{scalar_probes, vector_probes, CoefficientField, DiscreteGradient, Flavor, GridDomain, PointLayout};
use crate::error::{Error, Result};
use crate::evo::{block_diagonal, resolvent, skew_from_blocks, MaterialLaw, SkewOp};
use crate::hilbert::{relative_wot_gap, HilbertSpace, LinearOp, ProbeSet};
use crate::homogenize::{integrate_period, laminate_limit};
use crate::schur::{schur_maps, tau_gap_maps, Decomposition, TauGap};
use crate::sparse::CsrMatrix;

/// Per-cell material data of the thermoelastic system.
#[derive(Clone, Debug)]
pub struct ThermoCoefficients {
    pub rho: Vec<f64>,
    pub c: CoefficientField<f64>,
    pub gamma: f64,
    pub w: Vec<f64>,
    pub kappa: CoefficientField<f64>,
}

/// (v, T, θ, Q) on nodes ⊕ points ⊕ nodes ⊕ points with
/// A = [[0, div, 0, 0], [grad₀, 0, 0, 0], [0, 0, 0, div], [0, 0, grad₀, 0]].
pub struct ThermoSystem {
    pub grad: Arc<DiscreteGradient<f64>>,
    pub coeffs: ThermoCoefficients,
    pub lambda: f64,
    pub space: HilbertSpace<f64>,
    pub a: SkewOp<f64>,
    pub m0: LinearOp<f64>,
    pub m1: LinearOp<f64>,
    pub law: MaterialLaw<f64>,
    /// Γ: nodes → points, θ ↦ γ θ(x_p) u with u = (1, …, 1)/√d.
    pub gamma_op: CsrMatrix<f64>,
    /// Evaluation of nodal scalars at the points (a W-isometry).
    pub eval: CsrMatrix<f64>,
    sizes: [usize; 4],
}

fn node_key(x: &[f64], lo: &[f64], h: &[f64]) -> Vec<i64> {
    x.iter().zip(lo).zip(h).map(|((x, l), h)| ((x - l) / h).round() as i64).collect()
}

/// Point-by-node evaluation matrix E; Eᴴ W_P E = W_S.
fn evaluation(grad: &DiscreteGradient<f64>) -> CsrMatrix<f64> {
    let dom = grad.domain();
    let d = dom.dim();
    let lo = dom.lo().to_vec();
    let h: Vec<f64> = (0..d).map(|a| dom.h(a)).collect();
    let index: HashMap<Vec<i64>, usize> =
        grad.node_coords().iter().enumerate().map(|(k, x)| (node_key(x, &lo, &h), k)).collect();
    let trips = grad
        .point_coords()
        .iter()
        .enumerate()
        .filter_map(|(p, x)| index.get(&node_key(x, &lo, &h)).map(|&k| (p, k, 1.0)))
        .collect();
    CsrMatrix::from_triplets(grad.n_points(), grad.scalar_space().dim(), trips)
}

fn inv_weights(space: &HilbertSpace<f64>) -> Vec<f64> {
    space.diag_weights().expect("diagonal").iter().map(|w| 1.0 / w).collect()
}

/// W_s⁻¹ Bᵀ W_t for B: s → t.
fn adjoint_matrix(b: &CsrMatrix<f64>, s: &HilbertSpace<f64>, t: &HilbertSpace<f64>) -> CsrMatrix<f64> {
    b.transpose().scale_rows(&inv_weights(s)).scale_cols(t.diag_weights().expect("diagonal"))
}

impl ThermoSystem {
    pub fn sizes(&self) -> [usize; 4] {
        self.sizes
    }
    pub fn dim(&self) -> usize {
        self.space.dim()
    }
    pub fn t(&self) -> &LinearOp<f64> {
        self.law.t()
    }
    /// Coercivity constant of λM₀ + M₁.
    pub fn c(&self) -> f64 {
        self.law.c()
    }

    /// Nodal multiplier E* diag(f) E of a per-cell scalar.
    fn nodal(&self, f: &[f64]) -> CsrMatrix<f64> {
        nodal_multiplier(&self.grad, &self.eval, f)
    }

    /// Block (i, j) of an operator on the product space.
    pub fn block(&self, m: &CsrMatrix<f64>, i: usize, j: usize) -> CsrMatrix<f64> {
        let off: Vec<usize> = self.sizes.iter().scan(0, |s, &n| {
            let o = *s;
            *s += n;
            Some(o)
        }).collect();
        m.select_rows(&(off[i]..off[i] + self.sizes[i]).collect::<Vec<_>>())
            .select_cols(&(off[j]..off[j] + self.sizes[j]).collect::<Vec<_>>())
    }

    /// Embeds a (v, T, θ, Q) tuple.
    pub fn pack(&self, parts: [&DVector<f64>; 4]) -> DVector<f64> {
        DVector::from_iterator(self.dim(), parts.iter().flat_map(|p| p.iter().copied()))
    }

    /// Sine probes placed in each of the four components.
    pub fn probes(&self, modes: usize) -> Result<ProbeSet<f64>> {
        let sp = scalar_probes(&self.grad, modes)?;
        let vp = vector_probes(&self.grad, modes)?;
        let zs = DVector::zeros(self.sizes[0]);
        let zv = DVector::zeros(self.sizes[1]);
        let mut v = Vec::new();
        for p in sp.vectors() {
            v.push(self.pack([p, &zv, &zs, &zv]));
            v.push(self.pack([&zs, &zv, p, &zv]));
        }
        for q in vp.vectors() {
            v.push(self.pack([&zs, q, &zs, &zv]));
            v.push(self.pack([&zs, &zv, &zs, q]));
        }
        ProbeSet::new(&self.space, v)
    }
}

fn nodal_multiplier(grad: &DiscreteGradient<f64>, eval: &CsrMatrix<f64>, f: &[f64]) -> CsrMatrix<f64> {
    let npts = grad.points_per_cell();
    let wp = grad.domain().cell_volume() / npts as f64;
    let d: Vec<f64> = (0..grad.n_points()).map(|p| wp * f[p / npts]).collect();
    let ws = inv_weights(grad.scalar_space());
    eval.transpose().scale_cols(&d).matmul(eval).scale_rows(&ws)
}

fn check_positive(name: &str, f: &[f64], cells: usize) -> Result<()> {
    if f.len() != cells {
        return Err(Error::Shape(format!("{name} has {} values for {cells} cells", f.len())));
    }
    if let Some(x) = f.iter().find(|x| !(**x > 0.0)) {
        return Err(Error::Invalid(format!("{name} must be positive, found {x}")));
    }
    Ok(())
}

/// Builds the thermoelastic system on `domain` (corner layout, grad₀ for v and θ).
pub fn assemble_thermo(domain: &GridDomain, coeffs: ThermoCoefficients, lambda: f64) -> Result<ThermoSystem> {
    let nc = domain.n_cells();
    check_positive("rho", &coeffs.rho, nc)?;
    check_positive("w", &coeffs.w, nc)?;
    if coeffs.c.domain() != domain || coeffs.kappa.domain() != domain {
        return Err(Error::Shape("C and kappa must live on the system grid".into()));
    }
    let grad = DiscreteGradient::with_layout(domain, Flavor::Dirichlet, PointLayout::Corners)?;
    let d = domain.dim();
    let (s, v) = (grad.scalar_space().clone(), grad.vector_space().clone());
    let (ns, nv) = (s.dim(), v.dim());
    let npts = grad.points_per_cell();
    let g = grad.matrix().clone();

    let (space, a_op) = skew_from_blocks(&[&s, &v, &s, &v], &[(1, 0, &g), (3, 2, &g)])?;
    let ids = CsrMatrix::identity(ns);
    let a = SkewOp::with_range(&a_op, block_diagonal(&[&ids, &g, &ids, &g]))?;

    let eval = evaluation(&grad);
    let u = 1.0 / (d as f64).sqrt();
    let gamma_op = CsrMatrix::from_triplets(
        nv,
        ns,
        eval.triplets().into_iter().flat_map(|(p, k, e)| (0..d).map(move |i| (p * d + i, k, coeffs.gamma * u * e))).collect(),
    );
    let gamma_adj = adjoint_matrix(&gamma_op, &s, &v);
    let c_inv = coeffs.c.inverse()?.multiplier_matrix(npts);
    let k_inv = coeffs.kappa.inverse()?.multiplier_matrix(npts);
    let rho = nodal_multiplier(&grad, &eval, &coeffs.rho);
    let w = nodal_multiplier(&grad, &eval, &coeffs.w);
    let c_inv_g = c_inv.matmul(&gamma_op);
    let g_c_inv = gamma_adj.matmul(&c_inv);
    let m22 = w.add(&gamma_adj.matmul(&c_inv_g));
    let sizes = [ns, nv, ns, nv];
    let m0 = CsrMatrix::block(&sizes, &sizes, &[(0, 0, &rho), (1, 1, &c_inv), (1, 2, &c_inv_g), (2, 1, &g_c_inv), (2, 2, &m22)]);
    let m1 = CsrMatrix::block(&sizes, &sizes, &[(3, 3, &k_inv)]);
    let m0 = LinearOp::sparse(&space, &space, m0)?;
    let m1 = LinearOp::sparse(&space, &space, m1)?;
    let law = MaterialLaw::new(m0.clone(), m1.clone(), lambda)?;
    Ok(ThermoSystem { grad, coeffs, lambda, space, a, m0, m1, law, gamma_op, eval, sizes })
}

/// Defects of the three congruence identities under S = I − Γ* e₃e₂ᵀ.
#[derive(Clone, Debug)]
pub struct CongruenceReport {
    pub s: LinearOp<f64>,
    /// ‖S M₀ S* − diag(ρ₀, C⁻¹, w, 0)‖ relative.
    pub m0_defect: f64,
    /// ‖S M₁ S* − M₁‖ relative.
    pub m1_defect: f64,
    /// ‖S A S* − [[0, div, −divΓ, 0], [grad₀, 0, 0, 0], [−Γ*grad₀, 0, 0, div], [0, 0, grad₀, 0]]‖ relative.
    pub a_defect: f64,
    /// S A S* is again skew (relative defect).
    pub a_skew_defect: f64,
}

impl CongruenceReport {
    pub fn passes(&self) -> bool {
        self.m0_defect < 1e-9 && self.m1_defect < 1e-9 && self.a_defect < 1e-9 && self.a_skew_defect < 1e-9
    }
}

fn rel(a: &CsrMatrix<f64>, b: &CsrMatrix<f64>) -> f64 {
    a.add_scaled(-1.0, b).max_abs() / b.max_abs().max(1.0)
}

pub fn congruence_diagonalize(sys: &ThermoSystem) -> Result<CongruenceReport> {
    let (sp, vp) = (sys.grad.scalar_space(), sys.grad.vector_space());
    let sizes = sys.sizes;
    let n = sys.dim();
    let gamma_adj = adjoint_matrix(&sys.gamma_op, sp, vp);
    let neg_gamma_adj = gamma_adj.scale(-1.0);
    let s = CsrMatrix::identity(n).add(&CsrMatrix::block(&sizes, &sizes, &[(2, 1, &neg_gamma_adj)]));
    let s_adj = adjoint_matrix(&s, &sys.space, &sys.space);
    let conj = |m: &CsrMatrix<f64>| s.matmul(m).matmul(&s_adj);

    let npts = sys.grad.points_per_cell();
    let c_inv = sys.coeffs.c.inverse()?.multiplier_matrix(npts);
    let rho = sys.nodal(&sys.coeffs.rho);
    let w = sys.nodal(&sys.coeffs.w);
    let m0_target = CsrMatrix::block(&sizes, &sizes, &[(0, 0, &rho), (1, 1, &c_inv), (2, 2, &w)]);
    let m0 = sys.m0.as_sparse().expect("assembled");
    let m1 = sys.m1.as_sparse().expect("assembled");

    let g = sys.grad.matrix();
    let div = adjoint_matrix(g, sp, vp).scale(-1.0);
    let div_gamma = div.matmul(&sys.gamma_op).scale(-1.0);
    let gamma_grad = gamma_adj.matmul(g).scale(-1.0);
    let a_target = CsrMatrix::block(
        &sizes,
        &sizes,
        &[(0, 1, &div), (0, 2, &div_gamma), (1, 0, g), (2, 0, &gamma_grad), (2, 3, &div), (3, 2, g)],
    );
    let a = sys.a.op().as_sparse().expect("assembled");
    let sas = conj(a);
    let sas_adj = adjoint_matrix(&sas, &sys.space, &sys.space);
    Ok(CongruenceReport {
        s: LinearOp::sparse(&sys.space, &sys.space, s.clone())?,
        m0_defect: rel(&conj(m0), &m0_target),
        m1_defect: rel(&conj(m1), m1),
        a_defect: rel(&sas, &a_target),
        a_skew_defect: sas.add(&sas_adj).max_abs() / sas.max_abs().max(1.0),
    })
}

/// Periodic profiles on (0, 1) driving the laminate coefficients c(n x₁) I, κ(n x₁) I,
/// w(n x₁) and ρ₀(n x₁).
#[derive(Clone)]
pub struct ThermoSequence {
    pub c: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    pub kappa: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    pub w: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    pub rho: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    pub gamma: f64,
    pub lambda: f64,
    pub dim: usize,
    pub cells_per_period: usize,
    pub probe_modes: usize,
    pub tolerance: f64,
}

impl ThermoSequence {
    /// Two-phase C ∈ {1, 4} with smooth κ, w and ρ₀ profiles, 16 cells per period in 1D.
    pub fn default_1d(gamma: f64) -> Self {
        ThermoSequence {
            c: Arc::new(|y| if y.fract() < 0.5 { 1.0 } else { 4.0 }),
            kappa: Arc::new(|y| 1.5 + 0.5 * (2.0 * PI * y).sin()),
            w: Arc::new(|y| 2.0 + (2.0 * PI * y).cos()),
            rho: Arc::new(|y| 1.0 + 0.5 * (2.0 * PI * y).sin()),
            gamma,
            lambda: 1.0,
            dim: 1,
            cells_per_period: 16,
            probe_modes: 4,
            tolerance: 5e-2,
        }
    }

    pub fn constant(c: f64, kappa: f64, w: f64, rho: f64, gamma: f64) -> Self {
        ThermoSequence {
            c: Arc::new(move |_| c),
            kappa: Arc::new(move |_| kappa),
            w: Arc::new(move |_| w),
            rho: Arc::new(move |_| rho),
            ..Self::default_1d(gamma)
        }
    }

    fn coefficients(&self, domain: &GridDomain, n: usize) -> Result<ThermoCoefficients> {
        let d = self.dim;
        let at = |f: &Arc<dyn Fn(f64) -> f64 + Send + Sync>, x: &[f64]| f((n as f64 * x[0]).rem_euclid(1.0));
        let iso = |f: &Arc<dyn Fn(f64) -> f64 + Send + Sync>| {
            CoefficientField::from_fn(domain, |x| DMatrix::identity(d, d) * at(f, x))
        };
        let cells: Vec<Vec<f64>> = (0..domain.n_cells()).map(|c| domain.cell_center(c)).collect();
        Ok(ThermoCoefficients {
            rho: cells.iter().map(|x| at(&self.rho, x)).collect(),
            c: iso(&self.c)?,
            gamma: self.gamma,
            w: cells.iter().map(|x| at(&self.w, x)).collect(),
            kappa: iso(&self.kappa)?,
        })
    }

    /// H-limits of C and κ (laminate formula) and weak limits of w and ρ₀.
    fn limit(&self, domain: &GridDomain) -> Result<ThermoCoefficients> {
        let d = self.dim;
        let lam = |f: &Arc<dyn Fn(f64) -> f64 + Send + Sync>| -> Result<CoefficientField<f64>> {
            let (h, m) = laminate_limit(|y| f(y))?;
            let mut t = DMatrix::identity(d, d) * m;
            t[(0, 0)] = h;
            CoefficientField::constant(domain, t)
        };
        let mean = |f: &Arc<dyn Fn(f64) -> f64 + Send + Sync>| integrate_period(|y| f(y), 1e-12);
        let nc = domain.n_cells();
        Ok(ThermoCoefficients {
            rho: vec![mean(&self.rho); nc],
            c: lam(&self.c)?,
            gamma: self.gamma,
            w: vec![mean(&self.w); nc],
            kappa: lam(&self.kappa)?,
        })
    }
}

#[derive(Clone, Debug)]
pub struct ThermoRow {
    pub n: usize,
    pub dim: usize,
    /// Relative WOT gap of the full resolvents.
    pub resolvent_gap: f64,
    /// τ(g₀, g₀^⊥) gaps of C_n against its H-limit.
    pub c_tau: TauGap,
    /// Relative WOT gaps of the nodal multipliers w_n and ρ₀_n against their means.
    pub w_gap: f64,
    pub rho_gap: f64,
}

#[derive(Clone, Debug)]
pub struct ThermoReport {
    pub gamma: f64,
    pub lambda: f64,
    pub rows: Vec<ThermoRow>,
    pub tolerance: f64,
}

impl ThermoReport {
    pub fn final_gap(&self) -> f64 {
        self.rows.last().map_or(f64::INFINITY, |r| r.resolvent_gap)
    }
    /// Final resolvent gap below tolerance and below the first one (or at noise level).
    pub fn passes(&self) -> bool {
        let first = self.rows.first().map_or(0.0, |r| r.resolvent_gap);
        self.final_gap() < self.tolerance && self.final_gap() <= first.max(1e-9)
    }
    pub fn csv_header() -> &'static str {
        "n,dim,resolvent_gap,c_tau_m00inv,c_tau_m01,c_tau_m10,c_tau_ms,w_gap,rho_gap"
    }
    pub fn csv_rows(&self) -> Vec<String> {
        self.rows
            .iter()
            .map(|r| {
                let t = r.c_tau.as_array();
                format!(
                    "{},{},{:e},{:e},{:e},{:e},{:e},{:e},{:e}",
                    r.n, r.dim, r.resolvent_gap, t[0], t[1], t[2], t[3], r.w_gap, r.rho_gap
                )
            })
            .collect()
    }
}

fn thermo_row(seq: &ThermoSequence, n: usize) -> Result<ThermoRow> {
    let cells = seq.cells_per_period * n;
    let domain = GridDomain::unit(seq.dim, cells)?;
    let sys_n = assemble_thermo(&domain, seq.coefficients(&domain, n)?, seq.lambda)?;
    let sys = assemble_thermo(&domain, seq.limit(&domain)?, seq.lambda)?;
    let probes = sys.probes(seq.probe_modes)?;
    let r_n = resolvent(sys_n.t(), &sys_n.a)?;
    let r = resolvent(sys.t(), &sys.a)?;
    let resolvent_gap = relative_wot_gap(&r_n, &r, &probes, &probes)?;

    let grad = &sys.grad;
    let dec = Decomposition::new(grad.range_subspace()?)?;
    let vp = vector_probes(grad, seq.probe_modes)?;
    let (p0, p1) = dec.restrict_probes(&vp)?;
    let c_n = sys_n.coeffs.c.multiplier(grad)?;
    let c = sys.coeffs.c.multiplier(grad)?;
    let c_tau = tau_gap_maps(&schur_maps(&c_n, &dec)?, &schur_maps(&c, &dec)?, &p0, &p1, true)?;

    let s = grad.scalar_space();
    let sp = scalar_probes(grad, seq.probe_modes)?;
    let mult = |m: CsrMatrix<f64>| LinearOp::sparse(s, s, m);
    let w_gap = relative_wot_gap(&mult(sys_n.nodal(&sys_n.coeffs.w))?, &mult(sys.nodal(&sys.coeffs.w))?, &sp, &sp)?;
    let rho_gap =
        relative_wot_gap(&mult(sys_n.nodal(&sys_n.coeffs.rho))?, &mult(sys.nodal(&sys.coeffs.rho))?, &sp, &sp)?;
    Ok(ThermoRow { n, dim: sys.dim(), resolvent_gap, c_tau, w_gap, rho_gap })
}

/// Resolvent gaps of the thermoelastic system along the sequence, on meshes with
/// `cells_per_period · n` cells per axis.
pub fn thermo_homogenization_experiment(seq: &ThermoSequence, n_list: &[usize]) -> Result<ThermoReport> {
    if n_list.is_empty() {
        return Err(Error::Invalid("empty n list".into()));
    }
    let rows = n_list.par_iter().map(|&n| thermo_row(seq, n)).collect::<Result<Vec<_>>>()?;
    Ok(ThermoReport { gamma: seq.gamma, lambda: seq.lambda, rows, tolerance: seq.tolerance })
}

/// The same experiment for each coupling constant in `gammas`.
pub fn thermo_gamma_sweep(seq: &ThermoSequence, gammas: &[f64], n_list: &[usize]) -> Result<Vec<ThermoReport>> {
    gammas
        .iter()
        .map(|&g| thermo_homogenization_experiment(&ThermoSequence { gamma: g, ..seq.clone() }, n_list))
        .collect()
}

pub fn thermo_n_list() -> Vec<usize> {
    vec![2, 4, 8, 16]
}
