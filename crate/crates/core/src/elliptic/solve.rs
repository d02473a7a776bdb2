use std::sync::Arc;

use nalgebra::DVector;

use super::coefficient::CoefficientField;
use super::grid::{DiscreteGradient, Flavor, GridDomain};
use crate::error::{Error, Result};
use crate::hilbert::{lanczos_extremes, HilbertSpace, ProbeSet, Subspace};
use crate::scalar::Scalar;
use crate::sparse::{CsrMatrix, SparseLu};

/// Right-hand side f ∈ H⁻¹: either v ↦ ⟨g, v⟩ for a density g on the scalar nodes, or
/// the flux form div₋₁ r, v ↦ −⟨r, grad v⟩.
#[derive(Clone, Debug)]
pub enum RhsFunctional<T: Scalar> {
    Density(DVector<T>),
    Flux(DVector<T>),
}

impl<T: Scalar> RhsFunctional<T> {
    pub fn density(grad: &DiscreteGradient<T>, g: impl Fn(&[f64]) -> T) -> Self {
        RhsFunctional::Density(grad.sample_scalar(g))
    }

    /// Load vector b with f(v) = bᴴ v.
    pub fn load(&self, grad: &DiscreteGradient<T>) -> Result<DVector<T>> {
        match self {
            RhsFunctional::Density(g) => {
                if g.len() != grad.scalar_space().dim() {
                    return Err(Error::Shape(format!("density of length {} on {} nodes", g.len(), grad.scalar_space().dim())));
                }
                Ok(grad.scalar_space().apply_weight(g))
            }
            RhsFunctional::Flux(r) => {
                if r.len() != grad.vector_space().dim() {
                    return Err(Error::Shape(format!("flux of length {} in dim {}", r.len(), grad.vector_space().dim())));
                }
                let wr = grad.vector_space().apply_weight(r);
                Ok(-grad.matrix().adjoint_mul_vec(&wr))
            }
        }
    }

    /// f(v).
    pub fn evaluate(&self, grad: &DiscreteGradient<T>, v: &DVector<T>) -> Result<T> {
        Ok(self.load(grad)?.dotc(v))
    }
}

/// Factorised Galerkin system GᴴW a G for one gradient and coefficient; solves are
/// read-only and may run concurrently.
pub struct EllipticSolver<T: Scalar> {
    grad: Arc<DiscreteGradient<T>>,
    coeff: CoefficientField<T>,
    a: CsrMatrix<T>,
    k: CsrMatrix<T>,
    lu: SparseLu<T>,
    /// W_S·1 for the flavors whose gradient annihilates constants.
    constraint: Option<DVector<T>>,
}

/// Solution u with flux q = a grad u and the relative Galerkin residual.
#[derive(Clone, Debug)]
pub struct Solution<T: Scalar> {
    pub u: DVector<T>,
    pub q: DVector<T>,
    pub residual: f64,
}

/// Galerkin matrix GᴴW A G of a sparse gradient and pointwise multiplier.
pub(crate) fn galerkin<T: Scalar>(g: &CsrMatrix<T>, w: &HilbertSpace<T>, a: &CsrMatrix<T>) -> CsrMatrix<T> {
    let wd: Vec<T> = w.diag_weights().expect("diagonal weights").iter().map(|&x| T::of(x)).collect();
    g.conj_transpose().matmul(&a.scale_rows(&wd)).matmul(g)
}

impl<T: Scalar> EllipticSolver<T> {
    /// Checks a ∈ M(α, β) (declared bounds, or the tight ones) and factorises.
    pub fn new(grad: &Arc<DiscreteGradient<T>>, coeff: &CoefficientField<T>) -> Result<Self> {
        if grad.domain() != coeff.domain() {
            return Err(Error::Shape("coefficient and gradient live on different grids".into()));
        }
        match coeff.bounds() {
            Some((al, be)) => {
                let m = coeff.membership(al, be)?;
                if !m.passes() {
                    return Err(Error::Coercivity(format!("coefficient leaves M({al}, {be})")));
                }
            }
            None => {
                coeff.tight_bounds()?;
            }
        }
        let a = coeff.multiplier_matrix(grad.points_per_cell());
        let k = galerkin(grad.matrix(), grad.vector_space(), &a);
        let (lu, constraint) = match grad.flavor() {
            Flavor::Dirichlet => (k.lu()?, None),
            Flavor::Neumann | Flavor::Periodic => {
                // Ground node 0; ker K is the constants, so the reduced matrix is regular.
                let n = k.nrows();
                let rest: Vec<usize> = (1..n).collect();
                let c = grad.scalar_space().apply_weight(&DVector::from_element(n, T::one()));
                (k.select_rows(&rest).select_cols(&rest).lu()?, Some(c))
            }
        };
        Ok(EllipticSolver { grad: grad.clone(), coeff: coeff.clone(), a, k, lu, constraint })
    }

    pub fn grad(&self) -> &Arc<DiscreteGradient<T>> {
        &self.grad
    }
    pub fn coefficient(&self) -> &CoefficientField<T> {
        &self.coeff
    }
    /// The Galerkin matrix GᴴW a G.
    pub fn matrix(&self) -> &CsrMatrix<T> {
        &self.k
    }

    /// Solves K u = b; for the Neumann and periodic flavors b must annihilate constants
    /// and u is normalised to ⟨1, u⟩ = 0.
    pub fn solve_load(&self, b: &DVector<T>) -> Result<(DVector<T>, f64)> {
        let n = self.k.nrows();
        if b.len() != n {
            return Err(Error::Shape(format!("load of length {} for {n} unknowns", b.len())));
        }
        let (u, b) = match &self.constraint {
            None => (self.lu.solve(b), b.clone()),
            Some(c) => {
                let total: T = b.iter().copied().fold(T::zero(), |s, x| s + x);
                let scale: f64 = b.iter().map(|x| x.abs_val()).sum::<f64>().max(self.unit_load());
                if total.abs_val() > 1e-10 * scale {
                    return Err(Error::Compatibility(format!(
                        "right-hand side does not annihilate constants (f(1) = {:e})",
                        total.abs_val()
                    )));
                }
                // Drop the admissible roundoff in f(1) so the grounded equation holds as well.
                let mass: T = c.iter().copied().fold(T::zero(), |s, x| s + x);
                let b = b - c * (total / mass);
                let mut u = DVector::zeros(n);
                u.rows_mut(1, n - 1).copy_from(&self.lu.solve(&b.rows(1, n - 1).into_owned()));
                let mean = c.dotc(&u) / mass;
                u.add_scalar_mut(-mean);
                (u, b)
            }
        };
        let res = self.residual(&u, &b);
        if res > 1e-10 {
            return Err(Error::SolverDiverged(format!("Galerkin residual {res:e} above 1e-10")));
        }
        Ok((u, res))
    }

    /// ‖K‖∞ times the largest nodal weight: the size of a load that is roundoff next to K.
    fn unit_load(&self) -> f64 {
        let w = self.grad.scalar_space().diag_weights().unwrap().iter().copied().fold(0.0, f64::max);
        self.k_norm() * w
    }

    fn k_norm(&self) -> f64 {
        (0..self.k.nrows()).map(|i| self.k.row(i).map(|(_, v)| v.abs_val()).sum::<f64>()).fold(0.0, f64::max)
    }

    /// Backward error ‖Ku − b‖∞ / (‖K‖∞‖u‖∞ + ‖b‖∞).
    pub fn residual(&self, u: &DVector<T>, b: &DVector<T>) -> f64 {
        let r = self.k.mul_vec(u) - b;
        let kn = self.k_norm();
        let denom = kn * u.camax() + b.camax();
        if denom == 0.0 {
            0.0
        } else {
            r.camax() / denom
        }
    }

    pub fn solve(&self, f: &RhsFunctional<T>) -> Result<Solution<T>> {
        let (u, residual) = self.solve_load(&f.load(&self.grad)?)?;
        let q = self.flux(&u);
        Ok(Solution { u, q, residual })
    }

    /// a grad u.
    pub fn flux(&self, u: &DVector<T>) -> DVector<T> {
        self.a.mul_vec(&self.grad.matrix().mul_vec(u))
    }

    /// Affine problem −div₋₁ a(grad u + z) = f; returns u and p = a(grad u + z).
    pub fn solve_affine(&self, z: &DVector<T>, f: &RhsFunctional<T>) -> Result<AffineSolution<T>> {
        if z.len() != self.grad.vector_space().dim() {
            return Err(Error::Shape("z is not a field on the vector space".into()));
        }
        let az = self.a.mul_vec(z);
        let shift = self.grad.matrix().adjoint_mul_vec(&self.grad.vector_space().apply_weight(&az));
        let b = f.load(&self.grad)? - shift;
        let (u, residual) = self.solve_load(&b)?;
        let p = self.a.mul_vec(&(self.grad.matrix().mul_vec(&u) + z));
        Ok(AffineSolution { u, p, residual })
    }
}

#[derive(Clone, Debug)]
pub struct AffineSolution<T: Scalar> {
    pub u: DVector<T>,
    pub p: DVector<T>,
    pub residual: f64,
}

/// Solves −div a grad u = f with the given flavor; returns (u, a grad u).
pub fn solve_elliptic<T: Scalar>(
    domain: &GridDomain,
    a: &CoefficientField<T>,
    f: &RhsFunctional<T>,
    flavor: Flavor,
) -> Result<(DVector<T>, DVector<T>)> {
    let grad = DiscreteGradient::build(domain, flavor)?;
    let s = EllipticSolver::new(&grad, a)?.solve(f)?;
    Ok((s.u, s.q))
}

/// Affine problem on the Dirichlet gradient; returns (u, p).
pub fn solve_affine<T: Scalar>(
    grad: &Arc<DiscreteGradient<T>>,
    a: &CoefficientField<T>,
    z: &DVector<T>,
    f: &RhsFunctional<T>,
) -> Result<AffineSolution<T>> {
    EllipticSolver::new(grad, a)?.solve_affine(z, f)
}

/// max over probes q ∈ g₀^⊥ of |⟨q, a⁻¹p − z⟩|; vanishes when p solves the dual problem.
pub fn dual_residual<T: Scalar>(
    grad: &DiscreteGradient<T>,
    a: &CoefficientField<T>,
    z: &DVector<T>,
    p: &DVector<T>,
    probes: &ProbeSet<T>,
) -> Result<f64> {
    let comp = grad.range_subspace()?.complement()?;
    let inv = a.inverse()?;
    let d = inv.apply_pointwise(grad.points_per_cell(), p) - z;
    let space = grad.vector_space();
    let mut worst: f64 = 0.0;
    for q in probes.vectors() {
        let q0 = comp.project(q);
        let n = space.norm(&q0);
        if n > 1e-8 {
            worst = worst.max(space.inner(&(q0 / T::of(n)), &d).abs_val());
        }
    }
    Ok(worst)
}

/// Probes lying in g₀^⊥, obtained by projecting `probes`.
pub fn complement_probes<T: Scalar>(grad: &DiscreteGradient<T>, probes: &ProbeSet<T>) -> Result<ProbeSet<T>> {
    let comp: Subspace<T> = grad.range_subspace()?.complement()?;
    let v: Vec<_> = probes.vectors().iter().map(|q| comp.project(q)).filter(|q| grad.vector_space().norm(q) > 1e-8).collect();
    ProbeSet::new(grad.vector_space(), v)
}

fn unit_laplacian<T: Scalar>(grad: &DiscreteGradient<T>) -> CsrMatrix<T> {
    let n = grad.vector_space().dim();
    galerkin(grad.matrix(), grad.vector_space(), &CsrMatrix::identity(n))
}

fn dirichlet_only<T: Scalar>(grad: &DiscreteGradient<T>) -> Result<()> {
    if grad.flavor() != Flavor::Dirichlet {
        return Err(Error::Invalid("H^-1 norms are defined on the Dirichlet gradient".into()));
    }
    Ok(())
}

/// ‖f‖ = sqrt(bᴴ K₁⁻¹ b) with the unit Laplacian K₁ = GᴴWG: the W-norm of the Riesz
/// representative in the energy norm ‖grad ·‖.
pub fn hminus_norm<T: Scalar>(grad: &DiscreteGradient<T>, f: &RhsFunctional<T>) -> Result<f64> {
    dirichlet_only(grad)?;
    let b = f.load(grad)?;
    let w = unit_laplacian(grad).lu()?.solve(&b);
    Ok(b.dotc(&w).re().max(0.0).sqrt())
}

/// Dual norm for the graph norm (‖u‖² + ‖grad u‖²)^{1/2}: sqrt(bᴴ (K₁ + W_S)⁻¹ b).
pub fn hminus_graph_norm<T: Scalar>(grad: &DiscreteGradient<T>, f: &RhsFunctional<T>) -> Result<f64> {
    dirichlet_only(grad)?;
    let b = f.load(grad)?;
    let ws: Vec<T> = grad.scalar_space().diag_weights().unwrap().iter().map(|&x| T::of(x)).collect();
    let k = unit_laplacian(grad).add(&CsrMatrix::diagonal(&ws));
    let w = k.lu()?.solve(&b);
    Ok(b.dotc(&w).re().max(0.0).sqrt())
}

/// Discrete Poincaré constant: the smallest singular value γ of grad₀, with the bound 1/(2R).
#[derive(Clone, Debug)]
pub struct PoincareReport {
    pub gamma: f64,
    pub lower_bound: f64,
}

impl PoincareReport {
    pub fn holds(&self) -> bool {
        self.gamma >= self.lower_bound
    }
}

pub fn poincare_constant(domain: &GridDomain) -> Result<PoincareReport> {
    let grad = DiscreteGradient::<f64>::build(domain, Flavor::Dirichlet)?;
    poincare_of(&grad)
}

/// γ² is the smallest eigenvalue of K₁ relative to W_S, found as the top Ritz value of
/// K₁⁻¹W_S (self-adjoint in the W_S inner product).
pub fn poincare_of(grad: &DiscreteGradient<f64>) -> Result<PoincareReport> {
    dirichlet_only(grad)?;
    let lu = unit_laplacian(grad).lu()?;
    let s = grad.scalar_space().clone();
    let s2 = s.clone();
    let op = move |x: &DVector<f64>| lu.solve(&s2.apply_weight(x));
    let (_, top) = lanczos_extremes(&s, &op, 200, 5)?;
    Ok(PoincareReport { gamma: 1.0 / top.sqrt(), lower_bound: 1.0 / (2.0 * grad.domain().max_abs_x1()) })
}
