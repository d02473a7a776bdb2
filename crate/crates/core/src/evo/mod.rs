//! Operator equations (T + A)u = f with A skew-adjoint: the ker A ⊕ ran A split,
//! resolvent estimates, elimination of the kernel component, recovery of T from a
//! resolvent, and joint tracking of τ(ker A, ran A) and resolvent convergence.

mod experiment;
mod resolvent;
mod skew;

pub use experiment::{
    abstract_schur_experiment, grad_div_operator, loglog_slope, random_coefficient, random_skew, synthetic_n_list,
    two_scale_member, two_scale_n_list, EvoInstance, EvoReport, EvoRow, Regime, SyntheticFixture, SYNTHETIC_TOLERANCE,
    TWO_SCALE_TOLERANCE,
};
pub use resolvent::{
    block_solve, re_min, recover_coefficient, resolvent, resolvent_bounds, BlockSolution, MaterialLaw, ResolventBounds,
};
pub use skew::{block_diagonal, skew_from_blocks, skew_split, SkewOp};
