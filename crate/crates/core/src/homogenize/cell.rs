use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::elliptic::{CoefficientField, DiscreteGradient, EllipticSolver, Flavor, RhsFunctional};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// v_ξ = ξ + grad_# w with a v_ξ ∈ ker(grad_#^◇).
#[derive(Clone, Debug)]
pub struct CellSolution<T: Scalar> {
    pub xi: Vec<T>,
    /// Mean-free periodic corrector w.
    pub corrector: DVector<T>,
    /// v_ξ on the quadrature points.
    pub v: DVector<T>,
    /// max |⟨a v_ξ, grad_# φ_k⟩| over nodal basis functions, relative to the load scale.
    pub flux_residual: f64,
}

fn periodic_grad<T: Scalar>(a_cell: &CoefficientField<T>) -> Result<Arc<DiscreteGradient<T>>> {
    DiscreteGradient::build(a_cell.domain(), Flavor::Periodic)
}

fn solve_with<T: Scalar>(solver: &EllipticSolver<T>, xi: &[T]) -> Result<CellSolution<T>> {
    let grad = solver.grad();
    let d = grad.domain().dim();
    if xi.len() != d {
        return Err(Error::Shape(format!("xi has {} components in dimension {d}", xi.len())));
    }
    let z = grad.constant_field(xi);
    let zero = RhsFunctional::Density(DVector::zeros(grad.scalar_space().dim()));
    let sol = solver.solve_affine(&z, &zero)?;
    let v = grad.apply(&sol.u) + &z;
    let res = grad.matrix().adjoint_mul_vec(&grad.vector_space().apply_weight(&sol.p)).camax();
    let load = solver.coefficient().apply_pointwise(grad.points_per_cell(), &z);
    let load_scale = grad.matrix().adjoint_mul_vec(&grad.vector_space().apply_weight(&load)).camax();
    let flux_residual = if load_scale > 0.0 { res / load_scale } else { res };
    Ok(CellSolution { xi: xi.to_vec(), corrector: sol.u, v, flux_residual })
}

/// Periodic cell problem on Y = (0,1)^d for the direction ξ.
pub fn cell_problem<T: Scalar>(a_cell: &CoefficientField<T>, xi: &[T]) -> Result<CellSolution<T>> {
    let grad = periodic_grad(a_cell)?;
    let solver = EllipticSolver::new(&grad, a_cell)?;
    solve_with(&solver, xi)
}

/// a_hom with columns ∫_Y a v_{e_j} / |Y|.
pub fn homogenized_tensor<T: Scalar>(a_cell: &CoefficientField<T>) -> Result<DMatrix<T>> {
    Ok(homogenized_tensor_report(a_cell)?.0)
}

/// a_hom together with the worst flux residual of the d cell problems.
pub fn homogenized_tensor_report<T: Scalar>(a_cell: &CoefficientField<T>) -> Result<(DMatrix<T>, f64)> {
    let grad = periodic_grad(a_cell)?;
    let solver = EllipticSolver::new(&grad, a_cell)?;
    let d = grad.domain().dim();
    let npts = grad.points_per_cell();
    let w = grad.vector_space().diag_weights().unwrap();
    let vol = grad.domain().volume();
    let mut a_hom = DMatrix::zeros(d, d);
    let mut worst: f64 = 0.0;
    for j in 0..d {
        let mut xi = vec![T::zero(); d];
        xi[j] = T::one();
        let s = solve_with(&solver, &xi)?;
        worst = worst.max(s.flux_residual);
        let flux = a_cell.apply_pointwise(npts, &s.v);
        for k in 0..flux.len() {
            a_hom[(k % d, j)] += flux[k] * T::of(w[k] / vol);
        }
    }
    Ok((a_hom, worst))
}
