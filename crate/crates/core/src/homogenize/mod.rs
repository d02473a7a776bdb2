//! Oscillating coefficient families, their predicted H-limits and the two-parameter
//! (oscillation n, mesh h) experiments that compare them.

mod cell;
mod experiment;
mod limits;
mod sequence;

pub use cell::{cell_problem, homogenized_tensor, homogenized_tensor_report, CellSolution};
pub use experiment::{
    adjoint_symmetry_check, default_n_list, hconvergence_experiment, pearson, qdind_check, schur_equiv_check,
    AdjointReport, ExperimentOptions, HLimitReport, HLimitRow, QdindReport, QdindRow, NOISE,
};
pub use limits::{integrate_period, laminate_limit};
pub use sequence::{
    budget, check_budget, checkerboard, sine_profile, two_phase, CellFn, CoefficientSequence, MeshRule, Profile,
    SequenceKind, DEFAULT_BUDGET,
};
