//! File formats: structure text, volumetric grid text, plane-wave
//! coefficient binary, and the JSON project manifest.
//!
//! All writers are deterministic and all text writers emit floating-point
//! values with 17 significant digits (`{:.16e}`), which guarantees that
//! `parse(write(x))` reproduces every finite `f64` bit for bit.

mod manifest;
mod structure;
mod volumetric;
mod wavefunction;

pub use manifest::{
    load_manifest, load_manifest_file, CorrectionEntry, DefectRecord, EpsilonSpec, GapStateRecord, HostBlock,
    HyperfineEntry, IntermediateState, Multiplicity, OrbitalFile, ProjectManifest, SpinLabel,
    TransitionKind, ZfsEntry, ZplEntry,
};
pub use structure::{parse_structure, write_structure};
pub use volumetric::{parse_volumetric, write_volumetric, VolumetricGrid};
pub use wavefunction::{
    read_wavefunctions, write_wavefunctions, Band, SpinKBlock, WavefunctionSet, NORM_TOL,
    WEIGHT_TOL,
};

use crate::model::ModelError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("count mismatch in {what}: expected {expected}, found {found}")]
    CountMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("format error: {0}")]
    Format(String),
    #[error("truncated file: needed {needed} more bytes at offset {offset}")]
    Truncated { offset: u64, needed: u64 },
    #[error("band norm {norm:.9} outside 1 ± {tol:.0e} (spin {spin}, k-point {kpoint}, band {band})", tol = NORM_TOL)]
    Normalization {
        spin: usize,
        kpoint: usize,
        band: usize,
        norm: f64,
    },
    #[error("k-point weights sum to {sum:.12}, expected 1 (spin {spin})")]
    WeightError { spin: usize, sum: f64 },
    #[error("plane-wave kinetic energy {energy_ev:.3} eV exceeds cutoff {encut_ev:.3} eV (spin {spin}, k-point {kpoint}, G index {index})")]
    CutoffExceeded {
        spin: usize,
        kpoint: usize,
        index: usize,
        energy_ev: f64,
        encut_ev: f64,
    },
    #[error("manifest schema violation at {path}: {message}")]
    Schema { path: String, message: String },
    #[error("referenced artifact not found: {path}")]
    MissingArtifact { path: String },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
