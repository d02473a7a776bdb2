use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use super::yee::YeeGrid;
use crate::elliptic::{CoefficientField, GridDomain};
use crate::error::{Error, Result};
use crate::evo::skew_from_blocks;
use crate::hilbert::{relative_wot_gap, Apply, HilbertSpace, LinearOp, ProbeSet};
use crate::homogenize::laminate_limit;
use crate::sparse::{CsrMatrix, SparseLu};

/// (E, H) on interior edges ⊕ interior faces with A = [[0, −curl], [curl₀, 0]] and
/// T = diag(e, λμ), where e = λε + σ (or the λ-dependent limit ε(λ)) is given whole.
pub struct MaxwellSystem {
    pub grid: Arc<YeeGrid>,
    pub lambda: f64,
    pub space: HilbertSpace<f64>,
    pub a: LinearOp<f64>,
    pub t: LinearOp<f64>,
    /// min of the diagonal of T, which is Re T's lower bound here.
    pub c: f64,
}

fn diagonal_entries(field: &CoefficientField<f64>, name: &str) -> Result<Vec<[f64; 3]>> {
    field
        .cells()
        .iter()
        .map(|m| {
            let off = (0..3).flat_map(|i| (0..3).map(move |j| (i, j))).filter(|&(i, j)| i != j).map(|(i, j)| m[(i, j)].abs()).fold(0.0, f64::max);
            if off > 1e-14 * m.amax().max(1.0) {
                return Err(Error::Invalid(format!("{name} must be diagonal per cell on the staggered grid")));
            }
            Ok([m[(0, 0)], m[(1, 1)], m[(2, 2)]])
        })
        .collect()
}

/// Edge values: arithmetic mean over the cells sharing the edge (they sit in parallel).
pub fn edge_average(grid: &YeeGrid, field: &CoefficientField<f64>) -> Result<Vec<f64>> {
    let d = diagonal_entries(field, "edge coefficient")?;
    Ok((0..grid.n_edges())
        .map(|k| {
            let a = grid.edge_axis(k);
            let cs = grid.edge_cells(k);
            cs.iter().map(|&c| d[c][a]).sum::<f64>() / cs.len() as f64
        })
        .collect())
}

/// Face values: harmonic mean of the two cells across the face (they sit in series).
pub fn face_average(grid: &YeeGrid, field: &CoefficientField<f64>) -> Result<Vec<f64>> {
    let d = diagonal_entries(field, "face coefficient")?;
    Ok((0..grid.n_faces())
        .map(|k| {
            let a = grid.face_axis(k);
            let [l, r] = grid.face_cells(k);
            2.0 / (1.0 / d[l][a] + 1.0 / d[r][a])
        })
        .collect())
}

/// Builds the system from e = λε + σ (edges) and μ (faces).
pub fn assemble_maxwell(grid: &Arc<YeeGrid>, e: &CoefficientField<f64>, mu: &CoefficientField<f64>, lambda: f64) -> Result<MaxwellSystem> {
    if !(lambda > 0.0) {
        return Err(Error::Invalid(format!("lambda must be positive, got {lambda}")));
    }
    if e.domain() != grid.domain() || mu.domain() != grid.domain() {
        return Err(Error::Shape("coefficients must live on the Yee grid".into()));
    }
    let te = edge_average(grid, e)?;
    let tm: Vec<f64> = face_average(grid, mu)?.into_iter().map(|x| lambda * x).collect();
    let c = te.iter().chain(&tm).copied().fold(f64::INFINITY, f64::min);
    if !(c > 0.0) {
        return Err(Error::Coercivity(format!("lambda eps + sigma and mu must be positive definite (min {c:.3e})")));
    }
    let (space, a) = skew_from_blocks(&[grid.edge_space(), grid.face_space()], &[(1, 0, grid.curl0())])?;
    let diag: Vec<f64> = te.into_iter().chain(tm).collect();
    let t = LinearOp::sparse(&space, &space, CsrMatrix::diagonal(&diag))?;
    Ok(MaxwellSystem { grid: grid.clone(), lambda, space, a, t, c })
}

impl MaxwellSystem {
    /// (T + A)⁻¹ from a sparse LU, with its adjoint.
    pub fn resolvent(&self) -> Result<LinearOp<f64>> {
        let m = self.t.as_sparse().expect("assembled").add(self.a.as_sparse().expect("assembled"));
        let lu = Arc::new(SparseLu::new(Arc::new(m)).map_err(|_| Error::SingularResolvent)?);
        let l2 = lu.clone();
        let h = self.space.clone();
        let apply: Apply<f64> = Arc::new(move |x: &DVector<f64>| lu.solve(x));
        let adjoint: Apply<f64> = Arc::new(move |y: &DVector<f64>| h.solve_weight(&l2.solve_adjoint(&h.apply_weight(y))));
        Ok(LinearOp::from_fn_adjoint(&self.space, &self.space, apply, Some(adjoint)))
    }

    /// Smooth probes: e_a Π sin(k_b π x_b), k ∈ {1..modes}³, in each field.
    pub fn probes(&self, modes: usize) -> Result<ProbeSet<f64>> {
        let (ne, nf) = (self.grid.n_edges(), self.grid.n_faces());
        let mut v = Vec::new();
        for idx in 0..modes.pow(3) {
            let k = [(idx % modes + 1) as f64, ((idx / modes) % modes + 1) as f64, (idx / modes / modes + 1) as f64];
            let s = move |x: &[f64; 3]| (0..3).map(|b| (k[b] * PI * x[b]).sin()).product::<f64>();
            for a in 0..3 {
                let f = |x: &[f64; 3]| {
                    let mut out = [0.0; 3];
                    out[a] = s(x);
                    out
                };
                let ev = self.grid.sample_edges(f);
                let fv = self.grid.sample_faces(f);
                v.push(DVector::from_iterator(ne + nf, ev.iter().copied().chain(std::iter::repeat(0.0).take(nf))));
                v.push(DVector::from_iterator(ne + nf, std::iter::repeat(0.0).take(ne).chain(fv.iter().copied())));
            }
        }
        ProbeSet::new(&self.space, v)
    }
}

/// Laminate profiles on (0, 1) in x₁ for isotropic ε, μ, σ.
#[derive(Clone)]
pub struct MaxwellSequence {
    pub eps: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    pub mu: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    pub sigma: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    pub lambda: f64,
    pub cells_per_period: usize,
    pub probe_modes: usize,
    pub tolerance: f64,
}

fn two_phase(a: f64, b: f64) -> Arc<dyn Fn(f64) -> f64 + Send + Sync> {
    Arc::new(move |y: f64| if y.rem_euclid(1.0) < 0.5 { a } else { b })
}

impl MaxwellSequence {
    /// Two-phase ε ∈ {1, 4}, μ ∈ {1, 2}, σ ∈ {0.5, 0.1}, two cells per period.
    pub fn default_laminate() -> Self {
        MaxwellSequence {
            eps: two_phase(1.0, 4.0),
            mu: two_phase(1.0, 2.0),
            sigma: two_phase(0.5, 0.1),
            lambda: 1.0,
            cells_per_period: 2,
            probe_modes: 2,
            tolerance: 1e-1,
        }
    }

    /// ε fixed, only σ oscillating.
    pub fn oscillating_sigma() -> Self {
        MaxwellSequence { eps: Arc::new(|_| 2.0), mu: Arc::new(|_| 1.0), sigma: two_phase(0.1, 3.0), ..Self::default_laminate() }
    }

    pub fn constant(eps: f64, mu: f64, sigma: f64) -> Self {
        MaxwellSequence {
            eps: Arc::new(move |_| eps),
            mu: Arc::new(move |_| mu),
            sigma: Arc::new(move |_| sigma),
            ..Self::default_laminate()
        }
    }

    fn combined(&self) -> impl Fn(f64) -> f64 + '_ {
        move |y| self.lambda * (self.eps)(y) + (self.sigma)(y)
    }

    /// (e_n, μ_n) on `domain` for member n.
    pub fn fields(&self, domain: &GridDomain, n: usize) -> Result<(CoefficientField<f64>, CoefficientField<f64>)> {
        let e = self.combined();
        let at = |x: &[f64]| (n as f64 * x[0]).rem_euclid(1.0);
        Ok((
            CoefficientField::from_fn(domain, |x| DMatrix::identity(3, 3) * e(at(x)))?,
            CoefficientField::from_fn(domain, |x| DMatrix::identity(3, 3) * (self.mu)(at(x)))?,
        ))
    }

    /// ε(λ) = H-limit of λε_n + σ_n and the H-limit of μ_n, both diag(harmonic, mean, mean).
    pub fn limits(&self) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
        let lam = |f: &dyn Fn(f64) -> f64| -> Result<DMatrix<f64>> {
            let (h, m) = laminate_limit(f)?;
            Ok(DMatrix::from_diagonal(&DVector::from_vec(vec![h, m, m])))
        };
        let e = self.combined();
        Ok((lam(&e)?, lam(&|y| (self.mu)(y))?))
    }
}

#[derive(Clone, Debug)]
pub struct MaxwellRow {
    pub n: usize,
    pub cells: usize,
    pub dim: usize,
    pub resolvent_gap: f64,
    /// Coercivity constant of the member's T.
    pub coercivity: f64,
}

#[derive(Clone, Debug)]
pub struct MaxwellReport {
    pub lambda: f64,
    pub eps_lambda: DMatrix<f64>,
    pub mu_limit: DMatrix<f64>,
    pub rows: Vec<MaxwellRow>,
    pub tolerance: f64,
}

impl MaxwellReport {
    pub fn final_gap(&self) -> f64 {
        self.rows.last().map_or(f64::INFINITY, |r| r.resolvent_gap)
    }
    pub fn passes(&self) -> bool {
        let first = self.rows.first().map_or(0.0, |r| r.resolvent_gap);
        self.final_gap() < self.tolerance && self.final_gap() <= first.max(1e-9)
    }
    pub fn csv_header() -> &'static str {
        "n,cells,dim,resolvent_gap,coercivity"
    }
    pub fn csv_rows(&self) -> Vec<String> {
        self.rows.iter().map(|r| format!("{},{},{},{:e},{:e}", r.n, r.cells, r.dim, r.resolvent_gap, r.coercivity)).collect()
    }
}

/// Largest grid the Maxwell experiment accepts (cells per axis).
pub const MAX_CELLS: usize = 16;

fn maxwell_row(seq: &MaxwellSequence, n: usize, limits: &(DMatrix<f64>, DMatrix<f64>)) -> Result<MaxwellRow> {
    let cells = seq.cells_per_period * n;
    if cells > MAX_CELLS {
        return Err(Error::TooLarge(format!("{cells}³ Maxwell grid (limit {MAX_CELLS}³)")));
    }
    let grid = YeeGrid::unit(cells)?;
    let (e_n, mu_n) = seq.fields(grid.domain(), n)?;
    let sys_n = assemble_maxwell(&grid, &e_n, &mu_n, seq.lambda)
        .map_err(|e| match e {
            Error::Coercivity(m) => Error::Coercivity(format!("member n = {n}: {m}")),
            other => other,
        })?;
    let e = CoefficientField::constant(grid.domain(), limits.0.clone())?;
    let mu = CoefficientField::constant(grid.domain(), limits.1.clone())?;
    let sys = assemble_maxwell(&grid, &e, &mu, seq.lambda)?;
    let probes = sys.probes(seq.probe_modes)?;
    let resolvent_gap = relative_wot_gap(&sys_n.resolvent()?, &sys.resolvent()?, &probes, &probes)?;
    Ok(MaxwellRow { n, cells, dim: sys.space.dim(), resolvent_gap, coercivity: sys_n.c })
}

/// Resolvent gaps of the Maxwell system along the laminate sequence at fixed λ, on
/// meshes with `cells_per_period · n` cells per axis.
pub fn maxwell_homogenization_experiment(seq: &MaxwellSequence, n_list: &[usize]) -> Result<MaxwellReport> {
    if n_list.is_empty() {
        return Err(Error::Invalid("empty n list".into()));
    }
    let limits = seq.limits()?;
    let rows = n_list.par_iter().map(|&n| maxwell_row(seq, n, &limits)).collect::<Result<Vec<_>>>()?;
    Ok(MaxwellReport { lambda: seq.lambda, eps_lambda: limits.0, mu_limit: limits.1, rows, tolerance: seq.tolerance })
}

/// One report per λ; ε(λ) is recomputed for each and never split into λε′ + σ′.
pub fn maxwell_lambda_sweep(seq: &MaxwellSequence, lambdas: &[f64], n_list: &[usize]) -> Result<Vec<MaxwellReport>> {
    lambdas.iter().map(|&l| maxwell_homogenization_experiment(&MaxwellSequence { lambda: l, ..seq.clone() }, n_list)).collect()
}

pub fn maxwell_n_list() -> Vec<usize> {
    vec![2, 4, 8]
}

/// ε(λ)₁₁ for each λ (the normal component, where the limit is not affine in λ).
pub fn eps_lambda_curve(seq: &MaxwellSequence, lambdas: &[f64]) -> Result<Vec<f64>> {
    lambdas
        .iter()
        .map(|&l| {
            let s = MaxwellSequence { lambda: l, ..seq.clone() };
            Ok(s.limits()?.0[(0, 0)])
        })
        .collect()
}
