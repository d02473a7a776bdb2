use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::DVector;

use super::coefficient::CoefficientField;
use super::grid::{DiscreteGradient, Flavor, GridDomain};
use super::probes::bump;
use super::solve::{galerkin, poincare_of, EllipticSolver, RhsFunctional};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::sparse::{CsrMatrix, SparseLu};

/// ‖ι₀*(r_n − r)‖ against ‖div₋₁(r_n − r)‖ in two dual norms.
#[derive(Clone, Debug)]
pub struct DivergenceDefect {
    /// Norm of the g₀-projection of the difference.
    pub strong: f64,
    /// H⁻¹ norm dual to ‖grad ·‖.
    pub hminus: f64,
    /// H⁻¹ norm dual to the graph norm.
    pub hminus_graph: f64,
    /// hminus_graph / strong lies in [ratio_lower, ratio_upper] = [1/√(1+γ⁻²), 1].
    pub ratio_lower: f64,
    pub ratio_upper: f64,
}

/// Factorised Laplacians for repeated divergence tests on one Dirichlet grid.
pub struct DivergenceTester<T: Scalar> {
    grad: Arc<DiscreteGradient<T>>,
    lap: SparseLu<T>,
    graph: SparseLu<T>,
    gamma: f64,
}

impl<T: Scalar> DivergenceTester<T> {
    pub fn new(grad: &Arc<DiscreteGradient<T>>) -> Result<Self> {
        if grad.flavor() != Flavor::Dirichlet {
            return Err(Error::Invalid("the divergence test uses the Dirichlet gradient".into()));
        }
        let n = grad.vector_space().dim();
        let k = galerkin(grad.matrix(), grad.vector_space(), &CsrMatrix::identity(n));
        let ws: Vec<T> = grad.scalar_space().diag_weights().unwrap().iter().map(|&x| T::of(x)).collect();
        let graph = k.add(&CsrMatrix::diagonal(&ws)).lu()?;
        let real = DiscreteGradient::<f64>::with_layout(grad.domain(), Flavor::Dirichlet, grad.layout())?;
        let gamma = poincare_of(&real)?.gamma;
        Ok(DivergenceTester { grad: grad.clone(), lap: k.lu()?, graph, gamma })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn defect(&self, r_n: &DVector<T>, r: &DVector<T>) -> Result<DivergenceDefect> {
        let v = self.grad.vector_space();
        if r_n.len() != v.dim() || r.len() != v.dim() {
            return Err(Error::Shape("fields do not live on the vector space".into()));
        }
        let d = r_n - r;
        let b = -self.grad.matrix().adjoint_mul_vec(&v.apply_weight(&d));
        let strong = v.norm(&self.grad.range_subspace()?.project(&d));
        let hminus = b.dotc(&self.lap.solve(&b)).re().max(0.0).sqrt();
        let hminus_graph = b.dotc(&self.graph.solve(&b)).re().max(0.0).sqrt();
        Ok(DivergenceDefect {
            strong,
            hminus,
            hminus_graph,
            ratio_lower: 1.0 / (1.0 + 1.0 / (self.gamma * self.gamma)).sqrt(),
            ratio_upper: 1.0,
        })
    }
}

pub fn divergence_defect<T: Scalar>(grad: &Arc<DiscreteGradient<T>>, r_n: &DVector<T>, r: &DVector<T>) -> Result<DivergenceDefect> {
    DivergenceTester::new(grad)?.defect(r_n, r)
}

/// ∫⟨r(x), q(x)⟩ φ(x) dx by point quadrature on the vector space of `grad`.
pub fn divcurl_pairing<T: Scalar>(grad: &DiscreteGradient<T>, q: &DVector<T>, r: &DVector<T>, phi: &dyn Fn(&[f64]) -> f64) -> T {
    let d = grad.domain().dim();
    let w = grad.vector_space().diag_weights().unwrap();
    let mut s = T::zero();
    for (p, x) in grad.point_coords().iter().enumerate() {
        let f = phi(x);
        if f == 0.0 {
            continue;
        }
        let mut dot = T::zero();
        for i in 0..d {
            let k = p * d + i;
            dot += r[k].cj() * q[k];
        }
        s += dot * T::of(w[p * d] * f);
    }
    s
}

/// Per-sequence pairings ∫⟨r_n, q_n⟩φ for fields on one grid.
pub fn divcurl_pairings<T: Scalar>(
    grad: &DiscreteGradient<T>,
    q_n: &[DVector<T>],
    r_n: &[DVector<T>],
    phi: &dyn Fn(&[f64]) -> f64,
) -> Result<Vec<T>> {
    if q_n.len() != r_n.len() {
        return Err(Error::Shape("sequences of different lengths".into()));
    }
    Ok(q_n.iter().zip(r_n).map(|(q, r)| divcurl_pairing(grad, q, r, phi)).collect())
}

/// One row of a div-curl experiment.
#[derive(Clone, Debug)]
pub struct DivCurlRow {
    pub n: usize,
    /// ∫⟨r_n, q_n⟩φ.
    pub pairing: f64,
    /// ∫⟨r, q⟩φ for the weak limits r, q.
    pub limit_pairing: f64,
    /// |pairing − limit_pairing|.
    pub gap: f64,
    /// ‖ι₀*(r_n − r)‖ and ‖div₋₁(r_n − r)‖.
    pub strong: f64,
    pub hminus: f64,
}

/// Cutoff used by the 1D div-curl runs: bump centred at 1/2 with radius 0.45.
pub fn default_cutoff() -> impl Fn(&[f64]) -> f64 + Clone {
    bump(&[0.5], 0.45)
}

fn unit_grad(cells: usize) -> Result<Arc<DiscreteGradient<f64>>> {
    DiscreteGradient::build(&GridDomain::unit(1, cells)?, Flavor::Dirichlet)
}

/// q_n = r_n = grad₀ u_n with u_n = (1 − cos 2πnx)/(2πn): both converge weakly to 0, the
/// divergences are not precompact, and the pairing tends to ½∫φ instead of 0.
pub fn divcurl_counterexample(n_list: &[usize], cells_per_period: usize) -> Result<Vec<DivCurlRow>> {
    let phi = default_cutoff();
    n_list
        .iter()
        .map(|&n| {
            let grad = unit_grad(cells_per_period * n)?;
            let k = 2.0 * PI * n as f64;
            let u = grad.sample_scalar(|x| (1.0 - (k * x[0]).cos()) / k);
            let q = grad.apply(&u);
            let zero = DVector::zeros(q.len());
            let pairing = divcurl_pairing(&grad, &q, &q, &phi);
            let def = DivergenceTester::new(&grad)?.defect(&q, &zero)?;
            Ok(DivCurlRow { n, pairing, limit_pairing: 0.0, gap: pairing.abs(), strong: def.strong, hminus: def.hminus })
        })
        .collect()
}

/// Which field is paired with q_n = grad₀ u_n in the compliant run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CompliantKind {
    /// r_n = a_n grad₀ u_n, whose divergence −f does not depend on n.
    Flux,
    /// r_n = a fixed smooth field.
    Fixed,
}

/// u_n solves −(a_n u_n')' = 1 with a_n = 2 + sin(2πn·); limits come from the √3 solve
/// on the same mesh.
pub fn divcurl_compliant(n_list: &[usize], cells_per_period: usize, kind: CompliantKind) -> Result<Vec<DivCurlRow>> {
    let phi = default_cutoff();
    let hm = 3f64.sqrt();
    n_list
        .iter()
        .map(|&n| {
            let grad = unit_grad(cells_per_period * n)?;
            let dom = grad.domain().clone();
            let nf = n as f64;
            let a_n = CoefficientField::scalar(&dom, |x| 2.0 + (2.0 * PI * nf * x[0]).sin())?;
            let a_h = CoefficientField::scalar(&dom, |_| hm)?;
            let f = RhsFunctional::density(&grad, |_| 1.0);
            let s_n = EllipticSolver::new(&grad, &a_n)?.solve(&f)?;
            let s_h = EllipticSolver::new(&grad, &a_h)?.solve(&f)?;
            let q_n = grad.apply(&s_n.u);
            let q = grad.apply(&s_h.u);
            let (r_n, r) = match kind {
                CompliantKind::Flux => (s_n.q.clone(), s_h.q.clone()),
                CompliantKind::Fixed => {
                    let r = grad.sample_vector(|x| vec![(PI * x[0]).cos() + 0.5]);
                    (r.clone(), r)
                }
            };
            let pairing = divcurl_pairing(&grad, &q_n, &r_n, &phi);
            let limit_pairing = divcurl_pairing(&grad, &q, &r, &phi);
            let def = DivergenceTester::new(&grad)?.defect(&r_n, &r)?;
            Ok(DivCurlRow { n, pairing, limit_pairing, gap: (pairing - limit_pairing).abs(), strong: def.strong, hminus: def.hminus })
        })
        .collect()
}

/// Shipped divergence-test fixtures.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DivTestFixture {
    /// 2D: r_n = r + (I − P_g₀)ψ_n with oscillating ψ_n; the g₀-part never moves.
    Solenoidal,
    /// 1D: r_n = grad₀(sin(2πnx)/(2πn)) against r = 0.
    Gradient,
    /// 1D: fluxes a_n grad₀ u_n against the homogenised flux for a fixed load.
    Flux,
}

impl DivTestFixture {
    pub fn all() -> [DivTestFixture; 3] {
        [DivTestFixture::Solenoidal, DivTestFixture::Gradient, DivTestFixture::Flux]
    }

    pub fn name(&self) -> &'static str {
        match self {
            DivTestFixture::Solenoidal => "solenoidal",
            DivTestFixture::Gradient => "gradient",
            DivTestFixture::Flux => "flux",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::all().into_iter().find(|f| f.name() == s).ok_or_else(|| Error::Invalid(format!("unknown divtest fixture `{s}`")))
    }
}

#[derive(Clone, Debug)]
pub struct DivTestRow {
    pub n: usize,
    pub defect: DivergenceDefect,
}

pub fn divtest_fixture(fixture: DivTestFixture, n_list: &[usize]) -> Result<Vec<DivTestRow>> {
    match fixture {
        DivTestFixture::Solenoidal => {
            let grad = DiscreteGradient::<f64>::build(&GridDomain::unit(2, 48)?, Flavor::Dirichlet)?;
            let tester = DivergenceTester::new(&grad)?;
            let g0 = grad.range_subspace()?;
            let r = grad.sample_vector(|x| vec![x[1], (PI * x[0]).sin()]);
            n_list
                .iter()
                .map(|&n| {
                    let k = 2.0 * PI * n as f64;
                    let psi = grad.sample_vector(|x| vec![(k * x[1]).sin(), (k * x[0]).cos()]);
                    let r_n = &r + &psi - g0.project(&psi);
                    Ok(DivTestRow { n, defect: tester.defect(&r_n, &r)? })
                })
                .collect()
        }
        DivTestFixture::Gradient => n_list
            .iter()
            .map(|&n| {
                let grad = unit_grad(32 * n)?;
                let k = 2.0 * PI * n as f64;
                let r_n = grad.apply(&grad.sample_scalar(|x| (k * x[0]).sin() / k));
                let zero = DVector::zeros(r_n.len());
                Ok(DivTestRow { n, defect: DivergenceTester::new(&grad)?.defect(&r_n, &zero)? })
            })
            .collect(),
        DivTestFixture::Flux => {
            let rows = divcurl_compliant_fields(n_list, 32)?;
            rows.into_iter()
                .map(|(n, grad, r_n, r)| Ok(DivTestRow { n, defect: DivergenceTester::new(&grad)?.defect(&r_n, &r)? }))
                .collect()
        }
    }
}

fn divcurl_compliant_fields(
    n_list: &[usize],
    cells_per_period: usize,
) -> Result<Vec<(usize, Arc<DiscreteGradient<f64>>, DVector<f64>, DVector<f64>)>> {
    n_list
        .iter()
        .map(|&n| {
            let grad = unit_grad(cells_per_period * n)?;
            let dom = grad.domain().clone();
            let nf = n as f64;
            let a_n = CoefficientField::scalar(&dom, |x| 2.0 + (2.0 * PI * nf * x[0]).sin())?;
            let a_h = CoefficientField::scalar(&dom, |_| 3f64.sqrt())?;
            let f = RhsFunctional::density(&grad, |x| 1.0 + x[0]);
            let r_n = EllipticSolver::new(&grad, &a_n)?.solve(&f)?.q;
            let r = EllipticSolver::new(&grad, &a_h)?.solve(&f)?.q;
            Ok((n, grad, r_n, r))
        })
        .collect()
}
