//! The thermoelastic and Maxwell systems: assembly on grids, the congruence that
//! decouples the thermal block, discrete curl operators with their Helmholtz splits, and
//! resolvent homogenisation runs.

mod maxwell;
mod thermo;
mod yee;

pub use maxwell::{
    assemble_maxwell, edge_average, eps_lambda_curve, face_average, maxwell_homogenization_experiment, maxwell_lambda_sweep,
    maxwell_n_list, MaxwellReport, MaxwellRow, MaxwellSequence, MaxwellSystem, MAX_CELLS,
};
pub use thermo::{
    assemble_thermo, congruence_diagonalize, thermo_gamma_sweep, thermo_homogenization_experiment, thermo_n_list,
    CongruenceReport, ThermoCoefficients, ThermoReport, ThermoRow, ThermoSequence, ThermoSystem,
};
pub use yee::{helmholtz_decompose, HelmholtzFlavor, HelmholtzSplit, YeeGrid};
