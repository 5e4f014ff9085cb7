//! Magnetic fingerprints of a defect state: hyperfine coupling tensors
//! between the electron spin density and nearby nuclei, and zero-field
//! splitting from dipolar spin–spin coupling over occupied orbital pairs.
//!
//! All formulas are SI with the μ₀/4π factor written explicitly; grids
//! carry Å and Å⁻³ units and results come out in MHz (hyperfine) or GHz
//! (zero-field splitting).

mod hyperfine;
mod zfs;

pub use hyperfine::{
    dipole_dipole_tensor, dipole_dipole_tensor_with_cutoff, fermi_contact, hyperfine_prefactor_mhz,
    hyperfine_tensor, HyperfineTensor, R_CUT_EXCLUSION_A,
};
pub use zfs::{
    zfs_parameters, zfs_tensor, zfs_tensor_direct, OrbitalPairSet, SpinOrbital, ZfsParameters,
    ZfsTensor, DIRECT_GRID_LIMIT,
};

use nalgebra::Vector3;
use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum SpinError {
    #[error("no spin-density grid available")]
    MissingGrid,
    #[error("unknown isotope {isotope:?}; provide explicit nuclear data")]
    UnknownIsotope { isotope: String },
    #[error("hyperfine coupling requires unpaired spin, got S = 0")]
    NoUnpairedSpin,
    #[error("zero-field splitting requires S ≥ 1, got S = {total_spin}")]
    SpinTooLow { total_spin: f64 },
    #[error("orbital grids are incommensurate: {message}")]
    GridMismatch { message: String },
    #[error("direct evaluator is limited to {limit}³ grids, got {dims:?}")]
    GridTooLarge { dims: [usize; 3], limit: usize },
    #[error("need a symmetric traceless tensor: {message}")]
    InvalidTensor { message: String },
    #[error("orbitals entering the pair sum must carry an up or down spin label")]
    UnpolarizedOrbital,
}

/// Nuclear data for one isotope: spin quantum number and gyromagnetic
/// ratio γ/2π in MHz/T (sign included).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IsotopeData {
    pub symbol: &'static str,
    pub nuclear_spin: f64,
    pub gamma_over_2pi_mhz_t: f64,
}

/// Standard tabulated nuclear data for the isotopes of boron and nitrogen.
pub const ISOTOPE_TABLE: [IsotopeData; 4] = [
    IsotopeData {
        symbol: "10B",
        nuclear_spin: 3.0,
        gamma_over_2pi_mhz_t: 4.575,
    },
    IsotopeData {
        symbol: "11B",
        nuclear_spin: 1.5,
        gamma_over_2pi_mhz_t: 13.663,
    },
    IsotopeData {
        symbol: "14N",
        nuclear_spin: 1.0,
        gamma_over_2pi_mhz_t: 3.0777,
    },
    IsotopeData {
        symbol: "15N",
        nuclear_spin: 0.5,
        gamma_over_2pi_mhz_t: -4.3162,
    },
];

pub fn isotope_data(symbol: &str) -> Option<&'static IsotopeData> {
    ISOTOPE_TABLE.iter().find(|d| d.symbol == symbol)
}

/// A nucleus probed for hyperfine coupling: fractional position, isotope
/// label, and its gyromagnetic ratio in rad·s⁻¹·T⁻¹.
#[derive(Debug, Clone, PartialEq)]
pub struct NucleusSpec {
    pub position_frac: Vector3<f64>,
    pub isotope: String,
    pub gamma_rad_s_t: f64,
    pub nuclear_spin: f64,
}

impl NucleusSpec {
    /// Look the nuclear data up in the bundled table.
    pub fn from_isotope(position_frac: Vector3<f64>, isotope: &str) -> Result<Self, SpinError> {
        let data = isotope_data(isotope).ok_or_else(|| SpinError::UnknownIsotope {
            isotope: isotope.to_string(),
        })?;
        Ok(NucleusSpec {
            position_frac,
            isotope: isotope.to_string(),
            gamma_rad_s_t: data.gamma_over_2pi_mhz_t * 1e6 * 2.0 * std::f64::consts::PI,
            nuclear_spin: data.nuclear_spin,
        })
    }

    /// Override the bundled table with explicit nuclear data.
    pub fn with_parameters(
        position_frac: Vector3<f64>,
        isotope: &str,
        gamma_rad_s_t: f64,
        nuclear_spin: f64,
    ) -> Self {
        NucleusSpec {
            position_frac,
            isotope: isotope.to_string(),
            gamma_rad_s_t,
            nuclear_spin,
        }
    }
}
