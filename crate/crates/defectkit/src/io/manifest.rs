//! JSON project manifest: the single input document tying together host
//! properties, per-defect energies, and paths to on-disk artifacts.
//!
//! Top level: `{"host": {...}, "defects": [...]}`. Every struct rejects
//! unknown fields so typos surface as schema errors with a JSON path.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::{de, Deserialize, Serialize};

use super::IoError;

fn default_delta_h() -> f64 {
    -2.84
}

fn default_refractive_index() -> f64 {
    2.1
}

fn default_degeneracy() -> u32 {
    1
}

/// Host-crystal reference data shared by every defect entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HostBlock {
    /// Total energy of the pristine supercell, eV.
    pub e_total_ev: f64,
    /// Valence-band maximum on the common energy axis, eV.
    pub e_vbm_ev: f64,
    /// Band gap, eV.
    pub e_gap_ev: f64,
    /// Formation enthalpy of the host compound per formula unit, eV.
    #[serde(default = "default_delta_h")]
    pub delta_h_form_ev: f64,
    /// Elemental reference chemical potentials by species symbol, eV.
    #[serde(default)]
    pub mu_ref_ev: BTreeMap<String, f64>,
    /// Refractive index used for radiative lifetimes.
    #[serde(default = "default_refractive_index")]
    pub refractive_index: f64,
}

/// Spin multiplicity 2S+1, read from either an integer or a letter
/// ("S", "D", "T", "Q" for 1-4).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Multiplicity(u32);

impl Multiplicity {
    pub const SINGLET: Multiplicity = Multiplicity(1);
    pub const DOUBLET: Multiplicity = Multiplicity(2);
    pub const TRIPLET: Multiplicity = Multiplicity(3);

    pub fn new(two_s_plus_one: u32) -> Option<Self> {
        (two_s_plus_one >= 1).then_some(Multiplicity(two_s_plus_one))
    }

    pub fn value(self) -> u32 {
        self.0
    }

    /// Total spin S = (multiplicity − 1)/2.
    pub fn total_spin(self) -> f64 {
        (self.0 - 1) as f64 / 2.0
    }

    /// True when the state carries unpaired spin (multiplicity > 1).
    pub fn is_paramagnetic(self) -> bool {
        self.0 > 1
    }
}

impl fmt::Display for Multiplicity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            1 => f.write_str("S"),
            2 => f.write_str("D"),
            3 => f.write_str("T"),
            4 => f.write_str("Q"),
            n => write!(f, "{n}"),
        }
    }
}

impl Serialize for Multiplicity {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self.0 {
            1..=4 => serializer.serialize_str(&self.to_string()),
            n => serializer.serialize_u32(n),
        }
    }
}

impl<'de> Deserialize<'de> for Multiplicity {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct V;
        impl de::Visitor<'_> for V {
            type Value = Multiplicity;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a spin multiplicity: integer 2S+1 ≥ 1, or one of \"S\", \"D\", \"T\", \"Q\"")
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Multiplicity, E> {
                u32::try_from(v)
                    .ok()
                    .and_then(Multiplicity::new)
                    .ok_or_else(|| E::custom(format!("invalid spin multiplicity {v}")))
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Multiplicity, E> {
                u64::try_from(v)
                    .map_err(|_| E::custom(format!("invalid spin multiplicity {v}")))
                    .and_then(|v| self.visit_u64(v))
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<Multiplicity, E> {
                match v.to_ascii_uppercase().as_str() {
                    "S" => Ok(Multiplicity(1)),
                    "D" => Ok(Multiplicity(2)),
                    "T" => Ok(Multiplicity(3)),
                    "Q" => Ok(Multiplicity(4)),
                    _ => Err(E::custom(format!(
                        "unknown spin multiplicity {v:?} (expected S, D, T, Q, or an integer)"
                    ))),
                }
            }
        }
        deserializer.deserialize_any(V)
    }
}

/// Dielectric response: a single scalar or a full 3×3 tensor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EpsilonSpec {
    Isotropic(f64),
    Tensor([[f64; 3]; 3]),
}

/// Finite-size correction input: either a precomputed total, or the
/// ingredients (dielectric model, potential-alignment offset, defect
/// structure file) to compute one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct CorrectionEntry {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub e_corr_ev: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<EpsilonSpec>,
    /// Far-field electrostatic potential offset ΔV (defect − bulk), V.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_v_ev: Option<f64>,
    /// Path to the defect supercell structure file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub structure: Option<String>,
}

/// One Kohn-Sham level inside the gap, energy relative to the VBM.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GapStateRecord {
    pub energy_ev: f64,
    pub occupation: f64,
    pub spin: SpinLabel,
    #[serde(default = "default_degeneracy")]
    pub degeneracy: u32,
}

/// Spin channel of a level or orbital file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpinLabel {
    Up,
    Down,
    /// Spin-degenerate (doubly occupied) level.
    Paired,
}

/// Optical transition character: level-to-level within the gap, or
/// level-to-band (bound-exciton recombination with a delocalized carrier).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TransitionKind {
    LL,
    LD,
}

/// Zero-phonon-line record; energy given directly or as an excited/ground
/// total-energy pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ZplEntry {
    pub kind: TransitionKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub e_zpl_ev: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub e_excited_ev: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub e_ground_ev: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lifetime_ns: Option<f64>,
    /// Charge transition level the level-to-band transition recombines
    /// through, eV above the VBM. Required for LD, forbidden for LL.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ctl_reference_ev: Option<f64>,
}

impl ZplEntry {
    /// The transition energy, resolving the excited/ground pair form.
    pub fn zpl_ev(&self) -> f64 {
        match self.e_zpl_ev {
            Some(e) => e,
            None => self.e_excited_ev.unwrap() - self.e_ground_ev.unwrap(),
        }
    }
}

/// Zero-field-splitting summary, GHz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ZfsEntry {
    pub d_ghz: f64,
    #[serde(default)]
    pub e_ghz: f64,
}

/// Reference hyperfine coupling to one nuclear isotope, MHz.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HyperfineEntry {
    pub isotope: String,
    pub a_mhz: f64,
}

/// A higher-lying state of the same defect used by protocol classification
/// (e.g. an intermediate triplet above a singlet ground state).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntermediateState {
    pub multiplicity: Multiplicity,
    /// Energy above the ground state, eV.
    pub energy_ev: f64,
}

/// A volumetric orbital-density file for one spin channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OrbitalFile {
    pub spin: SpinLabel,
    pub path: String,
    /// Marked true for defect-localized orbitals (the default pair set for
    /// spin-spin integrals).
    #[serde(default)]
    pub localized: bool,
}

/// Everything recorded about one defect in one charge state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DefectRecord {
    pub label: String,
    pub charge: i32,
    pub e_total_ev: f64,
    /// Atoms added (+) or removed (−) per species relative to the host.
    #[serde(default)]
    pub delta_n: BTreeMap<String, i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub correction: Option<CorrectionEntry>,
    pub multiplicity: Multiplicity,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub point_group: Option<String>,
    #[serde(default)]
    pub gap_states: Vec<GapStateRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zpl: Option<ZplEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zfs: Option<ZfsEntry>,
    #[serde(default)]
    pub hyperfine: Vec<HyperfineEntry>,
    #[serde(default)]
    pub intermediate_states: Vec<IntermediateState>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spin_density: Option<String>,
    #[serde(default)]
    pub orbitals: Vec<OrbitalFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wavefunctions: Option<String>,
}

impl DefectRecord {
    /// Stable display label, e.g. `V_B^-1`, `B_N^0`, `B_i^+2`.
    pub fn charged_label(&self) -> String {
        match self.charge.cmp(&0) {
            Ordering::Greater => format!("{}^+{}", self.label, self.charge),
            Ordering::Equal => format!("{}^0", self.label),
            Ordering::Less => format!("{}^{}", self.label, self.charge),
        }
    }
}

/// The parsed and validated project manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProjectManifest {
    pub host: HostBlock,
    #[serde(default)]
    pub defects: Vec<DefectRecord>,
}

impl ProjectManifest {
    pub fn defect(&self, label: &str, charge: i32) -> Option<&DefectRecord> {
        self.defects
            .iter()
            .find(|d| d.label == label && d.charge == charge)
    }
}

fn schema_err(path: String, message: impl Into<String>) -> IoError {
    IoError::Schema {
        path,
        message: message.into(),
    }
}

fn validate(manifest: &ProjectManifest) -> Result<(), IoError> {
    let host = &manifest.host;
    if !(host.e_gap_ev > 0.0) {
        return Err(schema_err(
            "host.e_gap_ev".into(),
            format!("band gap must be positive, got {}", host.e_gap_ev),
        ));
    }
    if !(host.refractive_index > 0.0) {
        return Err(schema_err(
            "host.refractive_index".into(),
            format!("refractive index must be positive, got {}", host.refractive_index),
        ));
    }

    let mut seen = BTreeMap::new();
    for (i, d) in manifest.defects.iter().enumerate() {
        let at = |field: &str| format!("defects[{i}].{field}");
        if d.label.trim().is_empty() {
            return Err(schema_err(at("label"), "label must be non-empty"));
        }
        if let Some(first) = seen.insert((d.label.clone(), d.charge), i) {
            return Err(schema_err(
                at("charge"),
                format!(
                    "duplicate entry for {} (first at defects[{first}])",
                    d.charged_label()
                ),
            ));
        }
        for species in d.delta_n.keys() {
            if !host.mu_ref_ev.contains_key(species) {
                return Err(schema_err(
                    format!("defects[{i}].delta_n.{species}"),
                    format!("no reference chemical potential for species {species:?} in host.mu_ref_ev"),
                ));
            }
        }
        if let Some(c) = &d.correction {
            let explicit = c.e_corr_ev.is_some();
            let computed = c.epsilon.is_some() || c.structure.is_some() || c.delta_v_ev.is_some();
            if explicit && computed {
                return Err(schema_err(
                    at("correction"),
                    "give either e_corr_ev or the epsilon/delta_v_ev/structure ingredients, not both",
                ));
            }
            if !explicit && (c.epsilon.is_none() || c.structure.is_none()) {
                return Err(schema_err(
                    at("correction"),
                    "computed correction needs both epsilon and structure",
                ));
            }
            if let Some(EpsilonSpec::Isotropic(e)) = c.epsilon {
                if !(e > 0.0) {
                    return Err(schema_err(
                        at("correction.epsilon"),
                        format!("dielectric constant must be positive, got {e}"),
                    ));
                }
            }
            if d.charge == 0 {
                if let Some(e) = c.e_corr_ev {
                    if e != 0.0 {
                        return Err(schema_err(
                            at("correction.e_corr_ev"),
                            format!("neutral charge state cannot carry a finite-size correction ({e} eV)"),
                        ));
                    }
                }
            }
        }
        for (j, g) in d.gap_states.iter().enumerate() {
            let at = |field: &str| format!("defects[{i}].gap_states[{j}].{field}");
            if g.energy_ev < 0.0 || g.energy_ev > host.e_gap_ev {
                return Err(schema_err(
                    at("energy_ev"),
                    format!(
                        "gap-state energy {} eV outside [0, {}]",
                        g.energy_ev, host.e_gap_ev
                    ),
                ));
            }
            if g.degeneracy == 0 {
                return Err(schema_err(at("degeneracy"), "degeneracy must be ≥ 1"));
            }
            let max_occ = 2.0 * g.degeneracy as f64;
            if g.occupation < 0.0 || g.occupation > max_occ {
                return Err(schema_err(
                    at("occupation"),
                    format!("occupation {} outside [0, {max_occ}]", g.occupation),
                ));
            }
        }
        if let Some(z) = &d.zpl {
            let at = |field: &str| format!("defects[{i}].zpl.{field}");
            let direct = z.e_zpl_ev.is_some();
            let pair = (z.e_excited_ev.is_some(), z.e_ground_ev.is_some());
            match (direct, pair) {
                (true, (false, false)) | (false, (true, true)) => {}
                (true, _) => {
                    return Err(schema_err(
                        at("e_zpl_ev"),
                        "give either e_zpl_ev or the e_excited_ev/e_ground_ev pair, not both",
                    ))
                }
                (false, _) => {
                    return Err(schema_err(
                        at("e_zpl_ev"),
                        "need either e_zpl_ev or both e_excited_ev and e_ground_ev",
                    ))
                }
            }
            match z.kind {
                TransitionKind::LD if z.ctl_reference_ev.is_none() => {
                    return Err(schema_err(
                        at("ctl_reference_ev"),
                        "level-to-band transitions need the charge transition level they recombine through",
                    ))
                }
                TransitionKind::LL if z.ctl_reference_ev.is_some() => {
                    return Err(schema_err(
                        at("ctl_reference_ev"),
                        "level-to-level transitions must not carry a ctl_reference_ev",
                    ))
                }
                _ => {}
            }
            if let Some(t) = z.lifetime_ns {
                if !(t > 0.0) {
                    return Err(schema_err(
                        at("lifetime_ns"),
                        format!("lifetime must be positive, got {t}"),
                    ));
                }
            }
        }
        for (j, o) in d.orbitals.iter().enumerate() {
            if o.spin == SpinLabel::Paired {
                return Err(schema_err(
                    format!("defects[{i}].orbitals[{j}].spin"),
                    "orbital files belong to a single spin channel (up or down)",
                ));
            }
        }
    }
    Ok(())
}

fn check_artifacts(manifest: &ProjectManifest, base_dir: &Path) -> Result<(), IoError> {
    let check = |rel: &str| -> Result<(), IoError> {
        let p = base_dir.join(rel);
        if p.is_file() {
            Ok(())
        } else {
            Err(IoError::MissingArtifact {
                path: p.display().to_string(),
            })
        }
    };
    for d in &manifest.defects {
        if let Some(p) = &d.spin_density {
            check(p)?;
        }
        if let Some(p) = &d.wavefunctions {
            check(p)?;
        }
        for o in &d.orbitals {
            check(&o.path)?;
        }
        if let Some(c) = &d.correction {
            if let Some(p) = &c.structure {
                check(p)?;
            }
        }
    }
    Ok(())
}

/// Parse and validate a manifest. When `base_dir` is given, every referenced
/// artifact path must resolve to a file under it.
pub fn load_manifest(text: &str, base_dir: Option<&Path>) -> Result<ProjectManifest, IoError> {
    let mut de = serde_json::Deserializer::from_str(text);
    let manifest: ProjectManifest =
        serde_path_to_error::deserialize(&mut de).map_err(|e| IoError::Schema {
            path: e.path().to_string(),
            message: e.inner().to_string(),
        })?;
    de.end().map_err(|e| IoError::Schema {
        path: ".".into(),
        message: format!("trailing content after manifest: {e}"),
    })?;
    validate(&manifest)?;
    if let Some(base) = base_dir {
        check_artifacts(&manifest, base)?;
    }
    Ok(manifest)
}

/// Read a manifest from disk, resolving artifact paths relative to its
/// directory.
pub fn load_manifest_file(path: &Path) -> Result<ProjectManifest, IoError> {
    let text = std::fs::read_to_string(path)?;
    let base = path.parent().filter(|p| !p.as_os_str().is_empty());
    load_manifest(&text, base.or(Some(Path::new("."))))
}

#[cfg(test)]
mod tests {
    use super::*;

    const HOST_ONLY: &str = r#"{
        "host": {
            "e_total_ev": -1049.336,
            "e_vbm_ev": 0.824,
            "e_gap_ev": 4.88,
            "mu_ref_ev": { "B": -6.35, "N": -8.232 }
        }
    }"#;

    fn one_defect(defect_json: &str) -> String {
        format!(
            r#"{{
                "host": {{
                    "e_total_ev": -1049.336,
                    "e_vbm_ev": 0.824,
                    "e_gap_ev": 4.88,
                    "delta_h_form_ev": -2.842,
                    "mu_ref_ev": {{ "B": -6.35, "N": -8.232 }}
                }},
                "defects": [{defect_json}]
            }}"#
        )
    }

    const MINIMAL_DEFECT: &str = r#"{
        "label": "V_B", "charge": -1, "e_total_ev": -1031.24,
        "delta_n": { "B": -1 }, "multiplicity": "T"
    }"#;

    #[test]
    fn host_only_manifest_applies_defaults() {
        let m = load_manifest(HOST_ONLY, None).unwrap();
        assert!(m.defects.is_empty());
        assert_eq!(m.host.e_gap_ev, 4.88);
        assert_eq!(m.host.delta_h_form_ev, -2.84);
        assert_eq!(m.host.refractive_index, 2.1);
    }

    #[test]
    fn defect_entry_parses_with_letter_multiplicity() {
        let m = load_manifest(&one_defect(MINIMAL_DEFECT), None).unwrap();
        let d = &m.defects[0];
        assert_eq!(d.multiplicity, Multiplicity::TRIPLET);
        assert_eq!(d.multiplicity.total_spin(), 1.0);
        assert_eq!(d.charged_label(), "V_B^-1");
        assert_eq!(m.defect("V_B", -1).unwrap().e_total_ev, -1031.24);
    }

    #[test]
    fn integer_multiplicity_equivalent_to_letter() {
        let json = MINIMAL_DEFECT.replace("\"T\"", "3");
        let m = load_manifest(&one_defect(&json), None).unwrap();
        assert_eq!(m.defects[0].multiplicity, Multiplicity::TRIPLET);
    }

    #[test]
    fn fractional_charge_rejected_with_path() {
        let json = MINIMAL_DEFECT.replace("\"charge\": -1", "\"charge\": 1.5");
        match load_manifest(&one_defect(&json), None) {
            Err(IoError::Schema { path, .. }) => assert_eq!(path, "defects[0].charge"),
            other => panic!("expected schema error, got {other:?}"),
        }
    }

    #[test]
    fn unknown_field_rejected_with_path() {
        let json = MINIMAL_DEFECT.replace("\"charge\": -1", "\"charge\": -1, \"chrage\": -1");
        match load_manifest(&one_defect(&json), None) {
            Err(IoError::Schema { path, message }) => {
                assert_eq!(path, "defects[0].chrage");
                assert!(message.contains("unknown field"));
            }
            other => panic!("expected schema error, got {other:?}"),
        }
    }

    #[test]
    fn trailing_content_rejected() {
        let text = format!("{HOST_ONLY} 42");
        assert!(matches!(
            load_manifest(&text, None),
            Err(IoError::Schema { .. })
        ));
    }

    #[test]
    fn duplicate_label_charge_rejected() {
        let json = format!("{MINIMAL_DEFECT}, {MINIMAL_DEFECT}");
        match load_manifest(&one_defect(&json), None) {
            Err(IoError::Schema { path, message }) => {
                assert_eq!(path, "defects[1].charge");
                assert!(message.contains("V_B^-1"));
            }
            other => panic!("expected schema error, got {other:?}"),
        }
    }

    #[test]
    fn unknown_species_in_delta_n_rejected() {
        let json = MINIMAL_DEFECT.replace("\"B\": -1", "\"C\": 1");
        match load_manifest(&one_defect(&json), None) {
            Err(IoError::Schema { path, .. }) => assert_eq!(path, "defects[0].delta_n.C"),
            other => panic!("expected schema error, got {other:?}"),
        }
    }

    #[test]
    fn nonpositive_gap_rejected() {
        let text = HOST_ONLY.replace("4.88", "0.0");
        match load_manifest(&text, None) {
            Err(IoError::Schema { path, .. }) => assert_eq!(path, "host.e_gap_ev"),
            other => panic!("expected schema error, got {other:?}"),
        }
    }

    #[test]
    fn correction_forms_are_exclusive() {
        let both = MINIMAL_DEFECT.replace(
            "\"multiplicity\": \"T\"",
            r#""multiplicity": "T",
               "correction": { "e_corr_ev": 0.35, "epsilon": 4.4, "structure": "d.dat" }"#,
        );
        assert!(matches!(
            load_manifest(&one_defect(&both), None),
            Err(IoError::Schema { .. })
        ));

        let neither = MINIMAL_DEFECT.replace(
            "\"multiplicity\": \"T\"",
            r#""multiplicity": "T", "correction": { "epsilon": 4.4 }"#,
        );
        assert!(matches!(
            load_manifest(&one_defect(&neither), None),
            Err(IoError::Schema { .. })
        ));

        let explicit = MINIMAL_DEFECT.replace(
            "\"multiplicity\": \"T\"",
            r#""multiplicity": "T", "correction": { "e_corr_ev": 0.35 }"#,
        );
        let m = load_manifest(&one_defect(&explicit), None).unwrap();
        assert_eq!(m.defects[0].correction.as_ref().unwrap().e_corr_ev, Some(0.35));
    }

    #[test]
    fn epsilon_accepts_scalar_or_tensor() {
        let tensor = MINIMAL_DEFECT.replace(
            "\"multiplicity\": \"T\"",
            r#""multiplicity": "T",
               "correction": { "epsilon": [[6.9,0,0],[0,6.9,0],[0,0,3.8]], "structure": "d.dat" }"#,
        );
        let m = load_manifest(&one_defect(&tensor), None).unwrap();
        match m.defects[0].correction.as_ref().unwrap().epsilon {
            Some(EpsilonSpec::Tensor(t)) => assert_eq!(t[2][2], 3.8),
            other => panic!("expected tensor epsilon, got {other:?}"),
        }
    }

    #[test]
    fn neutral_charge_with_nonzero_correction_rejected() {
        let json = MINIMAL_DEFECT
            .replace("\"charge\": -1", "\"charge\": 0")
            .replace(
                "\"multiplicity\": \"T\"",
                r#""multiplicity": "T", "correction": { "e_corr_ev": 0.35 }"#,
            );
        match load_manifest(&one_defect(&json), None) {
            Err(IoError::Schema { path, .. }) => {
                assert_eq!(path, "defects[0].correction.e_corr_ev")
            }
            other => panic!("expected schema error, got {other:?}"),
        }
    }

    #[test]
    fn gap_state_outside_gap_rejected() {
        let json = MINIMAL_DEFECT.replace(
            "\"multiplicity\": \"T\"",
            r#""multiplicity": "T",
               "gap_states": [ { "energy_ev": 5.0, "occupation": 1.0, "spin": "up" } ]"#,
        );
        match load_manifest(&one_defect(&json), None) {
            Err(IoError::Schema { path, .. }) => {
                assert_eq!(path, "defects[0].gap_states[0].energy_ev")
            }
            other => panic!("expected schema error, got {other:?}"),
        }
    }

    #[test]
    fn zpl_forms_are_exclusive_and_kind_gates_ctl_reference() {
        let ld_ok = MINIMAL_DEFECT.replace(
            "\"multiplicity\": \"T\"",
            r#""multiplicity": "T",
               "zpl": { "kind": "LD", "e_excited_ev": -1030.0, "e_ground_ev": -1030.63,
                        "ctl_reference_ev": 0.34 }"#,
        );
        let m = load_manifest(&one_defect(&ld_ok), None).unwrap();
        let z = m.defects[0].zpl.as_ref().unwrap();
        assert!((z.zpl_ev() - 0.63).abs() < 1e-12);

        let ld_missing_ctl = ld_ok.replace(",\n                        \"ctl_reference_ev\": 0.34", "");
        assert!(matches!(
            load_manifest(&one_defect(&ld_missing_ctl), None),
            Err(IoError::Schema { .. })
        ));

        let ll_with_ctl = ld_ok.replace("\"LD\"", "\"LL\"");
        assert!(matches!(
            load_manifest(&one_defect(&ll_with_ctl), None),
            Err(IoError::Schema { .. })
        ));

        let both_forms = MINIMAL_DEFECT.replace(
            "\"multiplicity\": \"T\"",
            r#""multiplicity": "T",
               "zpl": { "kind": "LL", "e_zpl_ev": 1.62, "e_excited_ev": -1030.0, "e_ground_ev": -1031.62 }"#,
        );
        assert!(matches!(
            load_manifest(&one_defect(&both_forms), None),
            Err(IoError::Schema { .. })
        ));
    }

    #[test]
    fn paired_orbital_spin_rejected() {
        let json = MINIMAL_DEFECT.replace(
            "\"multiplicity\": \"T\"",
            r#""multiplicity": "T",
               "orbitals": [ { "spin": "paired", "path": "orb.dat" } ]"#,
        );
        match load_manifest(&one_defect(&json), None) {
            Err(IoError::Schema { path, .. }) => assert_eq!(path, "defects[0].orbitals[0].spin"),
            other => panic!("expected schema error, got {other:?}"),
        }
    }

    #[test]
    fn artifact_paths_resolved_against_base_dir() {
        let dir = tempfile::tempdir().unwrap();
        let json = MINIMAL_DEFECT.replace(
            "\"multiplicity\": \"T\"",
            r#""multiplicity": "T", "spin_density": "spin.dat""#,
        );
        let text = one_defect(&json);

        match load_manifest(&text, Some(dir.path())) {
            Err(IoError::MissingArtifact { path }) => assert!(path.ends_with("spin.dat")),
            other => panic!("expected missing artifact, got {other:?}"),
        }

        std::fs::write(dir.path().join("spin.dat"), "x").unwrap();
        assert!(load_manifest(&text, Some(dir.path())).is_ok());
    }

    #[test]
    fn serialization_round_trips() {
        let json = MINIMAL_DEFECT.replace(
            "\"multiplicity\": \"T\"",
            r#""multiplicity": "T",
               "gap_states": [ { "energy_ev": 1.2, "occupation": 1.0, "spin": "down" } ],
               "zpl": { "kind": "LL", "e_zpl_ev": 1.62, "lifetime_ns": 583.5 },
               "zfs": { "d_ghz": 3.1 },
               "hyperfine": [ { "isotope": "14N", "a_mhz": 34.0 } ],
               "intermediate_states": [ { "multiplicity": "S", "energy_ev": 0.41 } ]"#,
        );
        let m = load_manifest(&one_defect(&json), None).unwrap();
        let round = load_manifest(&serde_json::to_string_pretty(&m).unwrap(), None).unwrap();
        assert_eq!(round, m);
        assert_eq!(round.defects[0].zfs.unwrap().e_ghz, 0.0);
    }
}
