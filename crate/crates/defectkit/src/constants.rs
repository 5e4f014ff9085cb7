//! Physical constants and unit conversions.
//!
//! Primitive values follow the 2018 CODATA adjustment; `h`, `e`, and `c` are
//! exact by SI definition. Derived constants are computed from the primitives
//! at compile time so every module agrees on the same values.

/// Coulomb constant e²/(4πε₀), in eV·Å per unit charge squared.
pub const COULOMB_EV_A: f64 = 14.399645;

/// Planck constant, J·s (SI exact).
pub const PLANCK_J_S: f64 = 6.62607015e-34;

/// Reduced Planck constant ħ = h/2π, J·s.
pub const HBAR_J_S: f64 = PLANCK_J_S / (2.0 * std::f64::consts::PI);

/// Elementary charge, C (SI exact).
pub const ELEMENTARY_CHARGE_C: f64 = 1.602176634e-19;

/// Speed of light in vacuum, m/s (SI exact).
pub const SPEED_OF_LIGHT_M_S: f64 = 299792458.0;

/// Vacuum permittivity ε₀, F/m.
pub const VACUUM_PERMITTIVITY_F_M: f64 = 8.8541878128e-12;

/// Vacuum permeability μ₀, N/A².
pub const VACUUM_PERMEABILITY_N_A2: f64 = 1.25663706212e-6;

/// μ₀/4π, the SI prefactor of all dipolar couplings, T·m/A.
pub const MU0_OVER_4PI: f64 = VACUUM_PERMEABILITY_N_A2 / (4.0 * std::f64::consts::PI);

/// Electron mass, kg.
pub const ELECTRON_MASS_KG: f64 = 9.1093837015e-31;

/// Electron gyromagnetic ratio magnitude γ_e = g_e·μ_B/ħ, rad·s⁻¹·T⁻¹.
pub const GAMMA_ELECTRON_RAD_S_T: f64 = 1.76085963023e11;

/// ħ²/m_e in eV·Å², the kinetic prefactor of plane-wave matrix elements.
/// Equals twice the familiar ħ²/2m_e = 3.80998 eV·Å².
pub const HBAR2_OVER_ME_EV_A2: f64 =
    HBAR_J_S * HBAR_J_S / (ELECTRON_MASS_KG * ELEMENTARY_CHARGE_C) * 1e20;

/// One debye in C·m.
pub const DEBYE_C_M: f64 = 1e-21 / SPEED_OF_LIGHT_M_S;

/// One debye in e·Å.
pub const DEBYE_E_A: f64 = DEBYE_C_M / ELEMENTARY_CHARGE_C * 1e10;

/// hc in eV·nm, for photon energy ↔ wavelength conversion.
pub const HC_EV_NM: f64 =
    PLANCK_J_S * SPEED_OF_LIGHT_M_S / ELEMENTARY_CHARGE_C * 1e9;

/// Joule → eV.
pub const J_TO_EV: f64 = 1.0 / ELEMENTARY_CHARGE_C;

/// eV → Joule.
pub const EV_TO_J: f64 = ELEMENTARY_CHARGE_C;
