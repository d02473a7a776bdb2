//! Weighted finite-dimensional Hilbert spaces, operators between them, subspaces,
//! the coercivity classes 𝓕(α, β) and weak-operator-topology gap diagnostics.
//!
//! All inner products are ⟨x, y⟩ = xᴴ W y, and every adjoint is taken with respect to
//! the weights: A* = W_s⁻¹ Āᵀ W_t.

mod coercivity;
mod gap;
mod op;
mod probe;
mod space;
mod subspace;

pub use coercivity::{
    coercivity_check, coercivity_check_tol, lanczos_extremes, operator_norm, unitary_matrix, CoercivityReport,
    DENSE_LIMIT, SINGULAR_COND,
};
pub use gap::{relative_wot_gap, strong_gap, wot_gap, wot_gap_scale, wot_scale};
pub use op::{Apply, LinearOp};
pub use probe::{random_vector, ProbeSet, DEFAULT_RANDOM_PROBES};
pub use space::{HilbertSpace, Weight};
pub use subspace::{kernel_range, Generator, Subspace, EXPLICIT_LIMIT};
