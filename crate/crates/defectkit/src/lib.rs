//! Post-DFT analysis toolkit for point-defect qubit screening.
//!
//! Given total energies, eigenvalues, densities, and wavefunctions from
//! supercell calculations, this crate derives the quantities that decide
//! whether a defect is a viable solid-state qubit: formation energies and
//! charge transition levels, finite-size image-charge corrections, radiative
//! lifetimes from plane-wave transition dipoles, hyperfine and zero-field
//! splitting tensors from spin densities and orbital pairs, and a rule-based
//! screening verdict with a deterministic report.

pub mod constants;
pub mod correction;
pub mod io;
pub mod model;
pub mod optics;
pub mod screening;
pub mod spin;
pub mod thermo;
