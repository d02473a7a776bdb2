//! Desk-scale laboratory for H-convergence: weighted Hilbert spaces, Schur block
//! calculus, structured-grid elliptic solvers, periodic homogenisation, skew-adjoint
//! evolutionary resolvents and the thermoelastic and Maxwell systems built on them.

pub mod dense;
pub mod error;
pub mod hilbert;
pub mod io;
pub mod scalar;
pub mod schur;
pub mod elliptic;
pub mod homogenize;
pub mod evo;
pub mod applications;
pub mod sparse;

pub use error::{Error, Result};
pub use num_complex::Complex64;
pub use scalar::Scalar;
