//! Qubit-candidate screening: the paramagnetic/level-count filter, the
//! bound-exciton extension for level-to-band emitters, protocol
//! classification, optical-band labeling, and deterministic JSON reports.
//!
//! The pass logic is layered: every defect is measured against the basic
//! filter (paramagnetic ground state, enough distinct in-gap levels), a
//! level-to-band emitter must additionally hold a positive bound-exciton
//! stability, and a singlet ground state is admitted through a named
//! exception when an intermediate triplet provides an intersystem
//! crossing. The microwave-reach check on the zero-field splitting is
//! advisory: it is recorded in the verdict but never flips it.

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::constants::HC_EV_NM;
use crate::io::{
    DefectRecord, GapStateRecord, HyperfineEntry, IntermediateState, Multiplicity,
    ProjectManifest, TransitionKind, ZfsEntry,
};
use crate::optics::{OpticsError, ZplRecord};
use crate::thermo::{chem_potentials, stable_charge_profile, DefectEntry, HostReference, ThermoError};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum ScreeningError {
    #[error("dossier for {label} is incomplete: missing {missing}")]
    IncompleteDossier { label: String, missing: String },
    #[error("invalid screening criteria: {message}")]
    InvalidCriteria { message: String },
    #[error("no dossiers to screen")]
    EmptyInput,
    #[error(transparent)]
    Thermo(#[from] ThermoError),
    #[error(transparent)]
    Optics(#[from] OpticsError),
}

/// Everything known about one charge state of one defect, flattened for
/// rule evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct DefectDossier {
    pub label: String,
    pub charge: i32,
    pub multiplicity: Multiplicity,
    /// In-gap single-particle levels (eV above the VBM). `None` means the
    /// electronic structure was never recorded — distinct from an empty
    /// list, which asserts there are no in-gap levels.
    pub gap_states: Option<Vec<GapStateRecord>>,
    pub zpl: Option<ZplRecord>,
    pub zfs: Option<ZfsEntry>,
    pub hyperfine: Vec<HyperfineEntry>,
    pub intermediate_states: Vec<IntermediateState>,
    /// Fermi-level window (eV) in which this charge state is the ground
    /// state, from the formation-energy envelope.
    pub stable_window: Option<(f64, f64)>,
}

impl DefectDossier {
    pub fn charged_label(&self) -> String {
        let sign = if self.charge > 0 { "+" } else if self.charge < 0 { "-" } else { "" };
        format!("{}^{}{}", self.label, sign, self.charge.abs())
    }
}

/// One optical band expressed as an energy interval; photons with
/// `min_ev < E < max_ev` (after snapping the wavelength to 1 nm) belong
/// to it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TelecomBand {
    pub label: String,
    pub min_ev: f64,
    pub max_ev: f64,
}

/// Tunable screening thresholds.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Criteria {
    pub require_paramagnetic: bool,
    pub min_gap_levels: u32,
    pub allow_bound_exciton: bool,
    /// Zero-field splittings above this are flagged as out of microwave
    /// reach (advisory). The default sits between the few-GHz splittings
    /// the literature treats as workable and the tens-of-GHz ones called
    /// impractical.
    pub max_zfs_ghz: f64,
    pub telecom_bands: Vec<TelecomBand>,
}

impl Default for Criteria {
    /// Defaults: paramagnetic ground state required, at least two
    /// distinct in-gap levels, bound-exciton emitters admitted, 20 GHz
    /// microwave threshold, and the five standard telecom windows
    /// (O 1260–1360, E 1360–1460, S 1460–1530, C 1530–1565, L 1565–1625 nm).
    /// Band edges are stored in eV at half-nm positions so that integer
    /// wavelengths compare strictly.
    fn default() -> Self {
        let band = |label: &str, lo_nm: f64, hi_nm: f64| TelecomBand {
            label: label.to_string(),
            min_ev: HC_EV_NM / (hi_nm + 0.5),
            max_ev: HC_EV_NM / (lo_nm - 0.5),
        };
        Criteria {
            require_paramagnetic: true,
            min_gap_levels: 2,
            allow_bound_exciton: true,
            max_zfs_ghz: 20.0,
            telecom_bands: vec![
                band("O", 1260.0, 1359.0),
                band("E", 1360.0, 1459.0),
                band("S", 1460.0, 1529.0),
                band("C", 1530.0, 1564.0),
                band("L", 1565.0, 1625.0),
            ],
        }
    }
}

impl Criteria {
    pub fn validate(&self) -> Result<(), ScreeningError> {
        let invalid = |message: String| Err(ScreeningError::InvalidCriteria { message });
        if self.min_gap_levels < 1 {
            return invalid("min_gap_levels must be at least 1".into());
        }
        if !(self.max_zfs_ghz > 0.0) {
            return invalid(format!("max_zfs_ghz must be positive, got {}", self.max_zfs_ghz));
        }
        for band in &self.telecom_bands {
            if band.label.is_empty() {
                return invalid("telecom band with empty label".into());
            }
            if !(band.min_ev > 0.0 && band.min_ev < band.max_ev) {
                return invalid(format!(
                    "telecom band {} has invalid energy range [{}, {}]",
                    band.label, band.min_ev, band.max_ev
                ));
            }
        }
        Ok(())
    }
}

/// Operating mechanism a candidate is assigned to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Protocol {
    /// Triplet ground state with a level-to-level optical cycle.
    TripletGroundNVlike,
    /// Singlet ground state reached through an intermediate triplet.
    SingletGroundISC,
    /// Level-to-band emitter with a stable bound exciton.
    BoundExciton,
    Rejected,
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Protocol::TripletGroundNVlike => "triplet-ground-NV-like",
            Protocol::SingletGroundISC => "singlet-ground-ISC",
            Protocol::BoundExciton => "bound-exciton",
            Protocol::Rejected => "rejected",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScreeningVerdict {
    /// Charged label, e.g. `V_B^-1`.
    pub label: String,
    pub charge: i32,
    pub pass: bool,
    pub protocol: Protocol,
    /// Ordered rule outcomes; never empty.
    pub reasons: Vec<String>,
    /// Advisory: zero-field splitting within microwave reach. `None`
    /// without ZFS data; never affects `pass`.
    pub microwave_ok: Option<bool>,
    /// Optical band of the transition, when one is recorded.
    pub band: Option<String>,
}

/// Paramagnetic-ground-state and level-count filter.
pub fn weber_filter(
    dossier: &DefectDossier,
    criteria: &Criteria,
) -> Result<(bool, Vec<String>), ScreeningError> {
    let states = dossier
        .gap_states
        .as_ref()
        .ok_or_else(|| ScreeningError::IncompleteDossier {
            label: dossier.charged_label(),
            missing: "in-gap level data".into(),
        })?;
    let mut reasons = Vec::new();

    let paramagnetic = dossier.multiplicity.is_paramagnetic();
    let spin_ok = if !criteria.require_paramagnetic {
        reasons.push("paramagnetic ground state not required".into());
        true
    } else if paramagnetic {
        reasons.push(format!(
            "paramagnetic ground state (multiplicity {})",
            dossier.multiplicity
        ));
        true
    } else {
        reasons.push("diamagnetic ground state".into());
        false
    };

    let distinct = distinct_level_count(states);
    let levels_ok = distinct >= criteria.min_gap_levels as usize;
    reasons.push(format!(
        "{distinct} distinct in-gap level{} (minimum {})",
        if distinct == 1 { "" } else { "s" },
        criteria.min_gap_levels
    ));

    Ok((spin_ok && levels_ok, reasons))
}

/// Number of distinct level energies, merging values within 1 μeV.
fn distinct_level_count(states: &[GapStateRecord]) -> usize {
    let mut energies: Vec<f64> = states.iter().map(|s| s.energy_ev).collect();
    energies.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut count = 0;
    let mut last = f64::NEG_INFINITY;
    for e in energies {
        if e - last > 1e-6 {
            count += 1;
        }
        last = e;
    }
    count
}

/// Stability rule for level-to-band emitters.
pub fn bound_exciton_filter(
    dossier: &DefectDossier,
    criteria: &Criteria,
) -> Result<(bool, Vec<String>), ScreeningError> {
    let incomplete = || ScreeningError::IncompleteDossier {
        label: dossier.charged_label(),
        missing: "level-to-band transition record with stability".into(),
    };
    let zpl = dossier.zpl.as_ref().ok_or_else(incomplete)?;
    if zpl.kind != TransitionKind::LD {
        return Err(incomplete());
    }
    let bes = zpl.bes.ok_or_else(incomplete)?;
    let mut reasons = Vec::new();
    if !criteria.allow_bound_exciton {
        reasons.push("bound-exciton emitters excluded by criteria".into());
        return Ok((false, reasons));
    }
    if bes.stable {
        reasons.push(format!("bound-exciton stability {:+.2} eV", bes.bes_ev));
        Ok((true, reasons))
    } else {
        reasons.push(format!(
            "bound-exciton stability {:+.2} eV is not positive",
            bes.bes_ev
        ));
        Ok((false, reasons))
    }
}

/// Assign the operating mechanism. Falls through to
/// [`Protocol::Rejected`]; never errors.
pub fn protocol_classify(dossier: &DefectDossier) -> Protocol {
    let is_ll = dossier
        .zpl
        .as_ref()
        .is_some_and(|z| z.kind == TransitionKind::LL);
    if dossier.multiplicity == Multiplicity::TRIPLET && is_ll {
        return Protocol::TripletGroundNVlike;
    }
    let has_intermediate_triplet = dossier
        .intermediate_states
        .iter()
        .any(|s| s.multiplicity == Multiplicity::TRIPLET);
    if dossier.multiplicity == Multiplicity::SINGLET && has_intermediate_triplet {
        return Protocol::SingletGroundISC;
    }
    let stable_ld = dossier
        .zpl
        .as_ref()
        .is_some_and(|z| z.kind == TransitionKind::LD && z.bes.is_some_and(|b| b.stable));
    if stable_ld {
        return Protocol::BoundExciton;
    }
    Protocol::Rejected
}

/// Advisory check that the splitting is addressable with microwaves.
pub fn microwave_manipulability(
    d_ghz: f64,
    _e_ghz: f64,
    criteria: &Criteria,
) -> (bool, Vec<String>) {
    let ok = d_ghz.abs() <= criteria.max_zfs_ghz;
    let verdict = if ok { "within" } else { "exceeds" };
    (
        ok,
        vec![format!(
            "zero-field splitting |D| = {:.1} GHz {verdict} the {} GHz microwave threshold (advisory)",
            d_ghz.abs(),
            criteria.max_zfs_ghz
        )],
    )
}

/// Label the optical band of a transition: the wavelength is snapped to
/// 1 nm, then matched against the configured telecom windows, the visible
/// range 380–780 nm, or neither.
pub fn telecom_band_check(zpl_ev: f64, criteria: &Criteria) -> String {
    assert!(zpl_ev > 0.0, "band lookup needs a positive transition energy");
    let lambda_nm = (HC_EV_NM / zpl_ev).round();
    let snapped_ev = HC_EV_NM / lambda_nm;
    for band in &criteria.telecom_bands {
        if snapped_ev > band.min_ev && snapped_ev < band.max_ev {
            return band.label.clone();
        }
    }
    if (380.0..=780.0).contains(&lambda_nm) {
        return "visible".into();
    }
    "outside-telecom".into()
}

/// Evaluate every dossier against the criteria.
///
/// The verdict logic: the mechanism from [`protocol_classify`] is kept
/// only if its entry requirements hold — the basic filter for
/// level-to-level emitters, basic filter plus positive stability for
/// bound-exciton emitters, and the named singlet-ground exception (which
/// overrides the paramagnetic rule) for intersystem-crossing candidates.
/// Everything else is `Rejected`, and `pass` is exactly
/// `protocol != Rejected`.
pub fn screen(
    dossiers: &[DefectDossier],
    criteria: &Criteria,
) -> Result<Vec<ScreeningVerdict>, ScreeningError> {
    criteria.validate()?;
    let mut ordered: Vec<&DefectDossier> = dossiers.iter().collect();
    ordered.sort_by(|a, b| (&a.label, a.charge).cmp(&(&b.label, b.charge)));

    let mut verdicts = Vec::with_capacity(ordered.len());
    for dossier in ordered {
        let (weber_pass, mut reasons) = weber_filter(dossier, criteria)?;
        let mechanism = protocol_classify(dossier);

        let admitted = match mechanism {
            Protocol::TripletGroundNVlike => weber_pass,
            Protocol::SingletGroundISC => {
                reasons.push(
                    "singlet ground state admitted: intermediate triplet enables intersystem crossing"
                        .into(),
                );
                true
            }
            Protocol::BoundExciton => {
                let (bes_pass, bes_reasons) = bound_exciton_filter(dossier, criteria)?;
                reasons.extend(bes_reasons);
                weber_pass && bes_pass
            }
            Protocol::Rejected => false,
        };
        let protocol = if admitted { mechanism } else { Protocol::Rejected };
        match protocol {
            Protocol::Rejected => reasons.push("rejected: no operating protocol applies".into()),
            p => reasons.push(format!("operating protocol: {p}")),
        }

        let microwave_ok = dossier.zfs.as_ref().map(|z| {
            let (ok, advisory) = microwave_manipulability(z.d_ghz, z.e_ghz, criteria);
            reasons.extend(advisory);
            ok
        });
        let band = dossier
            .zpl
            .as_ref()
            .map(|z| telecom_band_check(z.e_zpl_ev, criteria));

        verdicts.push(ScreeningVerdict {
            label: dossier.charged_label(),
            charge: dossier.charge,
            pass: admitted,
            protocol,
            reasons,
            microwave_ok,
            band,
        });
    }
    Ok(verdicts)
}

/// Build dossiers for every defect in a manifest, deriving stability
/// windows from the formation-energy envelope. `extra_corrections` fills
/// in finite-size corrections (eV) per (label, charge) for records that
/// do not state one explicitly; everything else defaults to zero.
pub fn assemble_dossiers(
    manifest: &ProjectManifest,
    extra_corrections: &BTreeMap<(String, i32), f64>,
) -> Result<Vec<DefectDossier>, ScreeningError> {
    let host = HostReference::from(&manifest.host);
    // Stability windows are chemical-potential independent (every charge
    // state of one defect shares its stoichiometry), so any growth
    // condition serves.
    let mu = chem_potentials(&host, 0.5)?;

    let mut by_label: BTreeMap<&str, Vec<&DefectRecord>> = BTreeMap::new();
    for record in &manifest.defects {
        by_label.entry(record.label.as_str()).or_default().push(record);
    }

    let mut dossiers = Vec::with_capacity(manifest.defects.len());
    for (label, records) in by_label {
        let entries: Vec<DefectEntry> = records
            .iter()
            .map(|r| DefectEntry::from_record(r, resolve_correction(r, extra_corrections)))
            .collect();
        let profile = stable_charge_profile(&entries, &host, &mu)?;
        for record in records {
            let stable_window = profile
                .iter()
                .find(|seg| seg.charge == record.charge)
                .map(|seg| (seg.e_f_start_ev, seg.e_f_end_ev));
            let zpl = record
                .zpl
                .as_ref()
                .map(|entry| ZplRecord::from_manifest(&record.charged_label(), entry))
                .transpose()?;
            dossiers.push(DefectDossier {
                label: label.to_string(),
                charge: record.charge,
                multiplicity: record.multiplicity,
                gap_states: Some(record.gap_states.clone()),
                zpl,
                zfs: record.zfs.clone(),
                hyperfine: record.hyperfine.clone(),
                intermediate_states: record.intermediate_states.clone(),
                stable_window,
            });
        }
    }
    dossiers.sort_by(|a, b| (&a.label, a.charge).cmp(&(&b.label, b.charge)));
    Ok(dossiers)
}

fn resolve_correction(
    record: &DefectRecord,
    extra_corrections: &BTreeMap<(String, i32), f64>,
) -> f64 {
    if let Some(e) = record.correction.as_ref().and_then(|c| c.e_corr_ev) {
        return e;
    }
    extra_corrections
        .get(&(record.label.clone(), record.charge))
        .copied()
        .unwrap_or(0.0)
}

#[derive(Debug, Clone, Serialize)]
struct ReportSummary {
    total: usize,
    candidates: usize,
    rejected: usize,
    protocols: BTreeMap<String, usize>,
}

#[derive(Debug, Clone, Serialize)]
struct Report<'a> {
    criteria: &'a Criteria,
    summary: ReportSummary,
    verdicts: Vec<ScreeningVerdict>,
}

/// Deterministic JSON screening report: criteria echo, summary counts,
/// verdicts sorted by (label, charge). Identical inputs produce
/// byte-identical output.
pub fn report(dossiers: &[DefectDossier], criteria: &Criteria) -> Result<String, ScreeningError> {
    if dossiers.is_empty() {
        return Err(ScreeningError::EmptyInput);
    }
    let verdicts = screen(dossiers, criteria)?;
    let candidates = verdicts.iter().filter(|v| v.pass).count();
    let mut protocols = BTreeMap::new();
    for v in &verdicts {
        *protocols.entry(v.protocol.to_string()).or_insert(0) += 1;
    }
    let report = Report {
        criteria,
        summary: ReportSummary {
            total: verdicts.len(),
            candidates,
            rejected: verdicts.len() - candidates,
            protocols,
        },
        verdicts,
    };
    let mut text = serde_json::to_string_pretty(&report).expect("report serialization");
    text.push('\n');
    Ok(text)
}
