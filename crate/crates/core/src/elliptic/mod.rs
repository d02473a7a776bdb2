//! Finite-difference realisations of grad₀, grad and grad_# on boxes, the variational
//! solvers built on them, H⁻¹ norms, Poincaré constants and the div-curl experiments.
//!
//! Scalars live on the grid nodes with lumped masses; vector fields live on quadrature
//! points inside each cell (the cell midpoint in 1D, the 2^d corners otherwise). At a
//! corner, component i of the gradient is the difference quotient along the axis-i edge
//! through that corner, so GᴴWG is the standard (2d+1)-point Laplacian.

mod coefficient;
mod divergence;
mod grid;
mod oned;
mod probes;
mod solve;

pub use coefficient::{CoefficientField, Membership};
pub use divergence::{
    default_cutoff, divcurl_compliant, divcurl_counterexample, divcurl_pairing, divcurl_pairings, divergence_defect,
    divtest_fixture, CompliantKind, DivCurlRow, DivTestFixture, DivTestRow, DivergenceDefect, DivergenceTester,
};
pub use grid::{DiscreteGradient, Flavor, GridDomain, PointLayout};
pub use oned::{arithmetic_mean, cell_integral, harmonic_mean, project_g0_1d, projected_inverse_1d};
pub use probes::{bump, default_modes, scalar_probes, sine_modes, vector_probes};
pub use solve::{
    complement_probes, dual_residual, hminus_graph_norm, hminus_norm, poincare_constant, poincare_of, solve_affine,
    solve_elliptic, AffineSolution, EllipticSolver, PoincareReport, RhsFunctional, Solution,
};
