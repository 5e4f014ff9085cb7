//! Implementations of the subcommands: each loads its inputs, delegates
//! the physics to the library, and renders a small CSV, JSON, or SVG.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::Vector3;
use rayon::prelude::*;

use defectkit::constants::DEBYE_E_A;
use defectkit::correction::{total_correction, DielectricModel};
use defectkit::io::{
    load_manifest_file, parse_structure, parse_volumetric, read_wavefunctions, DefectRecord,
    EpsilonSpec, Multiplicity, ProjectManifest, SpinLabel,
};
use defectkit::optics::{averaged_transition_dipole, radiative_lifetime, TransitionSpec};
use defectkit::screening::{assemble_dossiers, report, Criteria};
use defectkit::spin::{hyperfine_tensor, zfs_tensor, NucleusSpec, OrbitalPairSet, SpinOrbital};
use defectkit::thermo::{
    charge_transition_level, chem_potentials, diagram_data, formation_energy, normalized_ctl,
    DefectEntry, HostReference, TransitionLevel,
};

use crate::output::{emit, fmt_val};
use crate::svg;
use crate::{
    CliError, CorrectionArgs, CtlArgs, DiagramArgs, FormationArgs, HyperfineArgs, LifetimeArgs,
    ScreenArgs, ZfsArgs,
};

/// A loaded manifest plus the directory its relative paths resolve against.
struct Project {
    manifest: ProjectManifest,
    base_dir: PathBuf,
}

fn load_project(path: &Path) -> Result<Project, CliError> {
    let manifest = load_manifest_file(path)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let base_dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    Ok(Project { manifest, base_dir })
}

/// Run the image-charge sum for every record that specifies a dielectric
/// model but no precomputed value, in parallel, keyed by (label, charge).
fn computed_corrections(
    project: &Project,
    tol_ev: f64,
) -> Result<BTreeMap<(String, i32), f64>, CliError> {
    let jobs: Vec<&DefectRecord> = project
        .manifest
        .defects
        .iter()
        .filter(|r| {
            r.correction
                .as_ref()
                .is_some_and(|c| c.e_corr_ev.is_none() && c.epsilon.is_some())
        })
        .collect();
    let computed: Result<Vec<((String, i32), f64)>, CliError> = jobs
        .par_iter()
        .map(|record| {
            let entry = record.correction.as_ref().expect("filtered on Some");
            let spec = entry.epsilon.as_ref().expect("filtered on Some");
            let rel = entry.structure.as_deref().ok_or_else(|| {
                CliError::Input(format!(
                    "correction for {} (charge {}) specifies epsilon but no structure file",
                    record.label, record.charge
                ))
            })?;
            let path = project.base_dir.join(rel);
            let text = fs::read_to_string(&path)
                .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
            let crystal = parse_structure(&text)
                .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
            let model = DielectricModel::from_spec(spec)?;
            let result = total_correction(
                &crystal.lattice,
                record.charge,
                &model,
                entry.delta_v_ev.unwrap_or(0.0),
                tol_ev,
            )?;
            Ok(((record.label.clone(), record.charge), result.e_corr_ev))
        })
        .collect();
    Ok(computed?.into_iter().collect())
}

/// All manifest records as thermodynamic entries, corrections resolved
/// (explicit value first, then a computed one, then zero), sorted by
/// (label, charge).
fn defect_entries(
    project: &Project,
    corrections: &BTreeMap<(String, i32), f64>,
) -> Vec<DefectEntry> {
    let mut entries: Vec<DefectEntry> = project
        .manifest
        .defects
        .iter()
        .map(|record| {
            let e_corr = record
                .correction
                .as_ref()
                .and_then(|c| c.e_corr_ev)
                .or_else(|| {
                    corrections
                        .get(&(record.label.clone(), record.charge))
                        .copied()
                })
                .unwrap_or(0.0);
            DefectEntry::from_record(record, e_corr)
        })
        .collect();
    entries.sort_by(|a, b| a.label.cmp(&b.label).then(a.charge.cmp(&b.charge)));
    entries
}

/// Transition levels between consecutive charge states of each defect,
/// grouped by label, charges ascending within a group.
fn transition_rows(
    entries: &[DefectEntry],
    host: &HostReference,
) -> Result<Vec<(String, TransitionLevel)>, CliError> {
    let mut by_label: BTreeMap<&str, Vec<&DefectEntry>> = BTreeMap::new();
    for entry in entries {
        by_label.entry(&entry.label).or_default().push(entry);
    }
    let mut rows = Vec::new();
    for (label, group) in &by_label {
        for pair in group.windows(2) {
            let level = charge_transition_level(pair[0], pair[1], host)?;
            rows.push((label.to_string(), level));
        }
    }
    Ok(rows)
}

fn condition_label(lambda: f64) -> String {
    if lambda == 0.0 {
        "N-rich growth".to_string()
    } else if lambda == 1.0 {
        "B-rich growth".to_string()
    } else {
        format!("mixing parameter {lambda:.2}")
    }
}

pub fn formation(args: &FormationArgs) -> Result<(), CliError> {
    let project = load_project(&args.manifest)?;
    let corrections = computed_corrections(&project, args.tol)?;
    let host = HostReference::from(&project.manifest.host);
    let mu = chem_potentials(&host, args.condition)?;
    let entries = defect_entries(&project, &corrections);

    let mut csv = String::from("label,charge,e_form_ev\n");
    for entry in &entries {
        let e_form = formation_energy(entry, &host, &mu, 0.0)?;
        csv.push_str(&format!(
            "{},{},{}\n",
            entry.label,
            entry.charge,
            fmt_val(e_form, args.full_precision)
        ));
    }
    emit(args.out.as_deref(), &csv)
}

pub fn ctl(args: &CtlArgs) -> Result<(), CliError> {
    let project = load_project(&args.manifest)?;
    let corrections = computed_corrections(&project, args.tol)?;
    let host = HostReference::from(&project.manifest.host);
    let entries = defect_entries(&project, &corrections);
    let rows = transition_rows(&entries, &host)?;

    let mut csv = String::from("label,transition,epsilon_ev,epsilon_over_gap\n");
    for (label, level) in &rows {
        csv.push_str(&format!(
            "{},{},{},{}\n",
            label,
            level.name(),
            fmt_val(level.epsilon_ev, args.full_precision),
            fmt_val(normalized_ctl(level, host.e_gap_ev), args.full_precision),
        ));
    }

    if let Some(svg_path) = &args.svg {
        let mu = chem_potentials(&host, args.condition)?;
        let lines = diagram_data(&entries, &host, &mu)?;
        let image = svg::envelope_diagram(&lines, host.e_gap_ev, &condition_label(args.condition));
        fs::write(svg_path, image)
            .map_err(|e| CliError::Input(format!("cannot write {}: {e}", svg_path.display())))?;
    }
    emit(args.out.as_deref(), &csv)
}

pub fn lifetime(args: &LifetimeArgs) -> Result<(), CliError> {
    let bytes = fs::read(&args.wavefunctions).map_err(|e| {
        CliError::Input(format!("cannot read {}: {e}", args.wavefunctions.display()))
    })?;
    let set = read_wavefunctions(&bytes)
        .map_err(|e| CliError::Input(format!("{}: {e}", args.wavefunctions.display())))?;
    let spec = TransitionSpec {
        spin: args.spin,
        band_initial: args.band_initial,
        band_final: args.band_final,
    };
    // Validates every index, so the block lookup below cannot panic.
    let dipole_e_a = averaged_transition_dipole(&set, &spec)?;
    let e_ev = match args.e_zpl {
        Some(e) => e,
        None => {
            let bands = &set.block(args.spin, 0).bands;
            (bands[args.band_final].eigenvalue_ev - bands[args.band_initial].eigenvalue_ev).abs()
        }
    };
    let lifetime_ns =
        radiative_lifetime(e_ev, dipole_e_a, args.refractive_index, args.convention.into())?;

    let mut csv = String::from("e_ev,dipole_e_a,dipole_debye,lifetime_ns\n");
    csv.push_str(&format!(
        "{},{},{},{}\n",
        fmt_val(e_ev, args.full_precision),
        fmt_val(dipole_e_a, args.full_precision),
        fmt_val(dipole_e_a / DEBYE_E_A, args.full_precision),
        fmt_val(lifetime_ns, args.full_precision)
    ));
    emit(args.out.as_deref(), &csv)
}

pub fn hyperfine(args: &HyperfineArgs) -> Result<(), CliError> {
    let text = fs::read_to_string(&args.spin_density).map_err(|e| {
        CliError::Input(format!("cannot read {}: {e}", args.spin_density.display()))
    })?;
    let sigma = parse_volumetric(&text)
        .map_err(|e| CliError::Input(format!("{}: {e}", args.spin_density.display())))?;
    let multiplicity = Multiplicity::new(args.multiplicity)
        .ok_or_else(|| CliError::Input("multiplicity must be at least 1".into()))?;
    let position = Vector3::new(args.position[0], args.position[1], args.position[2]);
    let nucleus = NucleusSpec::from_isotope(position, &args.isotope)?;
    let tensor = hyperfine_tensor(multiplicity.total_spin(), &nucleus, &sigma)?;
    if let Some(warning) = &tensor.norm_warning {
        eprintln!("warning: {warning}");
    }

    let p = tensor.principal_mhz;
    let mut csv = String::from("isotope,a_iso_mhz,a_1_mhz,a_2_mhz,a_3_mhz\n");
    csv.push_str(&format!(
        "{},{},{},{},{}\n",
        args.isotope,
        fmt_val(tensor.a_iso_mhz, args.full_precision),
        fmt_val(p[0], args.full_precision),
        fmt_val(p[1], args.full_precision),
        fmt_val(p[2], args.full_precision)
    ));
    emit(args.out.as_deref(), &csv)
}

pub fn zfs(args: &ZfsArgs) -> Result<(), CliError> {
    let multiplicity = Multiplicity::new(args.multiplicity)
        .ok_or_else(|| CliError::Input("multiplicity must be at least 1".into()))?;
    let mut orbitals = Vec::with_capacity(args.orbitals.len());
    for spec in &args.orbitals {
        let (channel, path) = spec.split_once(':').ok_or_else(|| {
            CliError::Input(format!(
                "expected SPIN:FILE (e.g. up:orbital.grid), got {spec:?}"
            ))
        })?;
        let spin = match channel {
            "up" => SpinLabel::Up,
            "down" => SpinLabel::Down,
            other => {
                return Err(CliError::Input(format!(
                    "spin channel must be up or down, got {other:?}"
                )))
            }
        };
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("cannot read {path}: {e}")))?;
        let orbital =
            parse_volumetric(&text).map_err(|e| CliError::Input(format!("{path}: {e}")))?;
        orbitals.push(SpinOrbital { spin, orbital });
    }
    let pairs = OrbitalPairSet::new(orbitals, multiplicity.total_spin())?;
    let tensor = zfs_tensor(&pairs)?;

    let mut csv = String::from("d_ghz,e_ghz\n");
    csv.push_str(&format!(
        "{},{}\n",
        fmt_val(tensor.d_ghz, args.full_precision),
        fmt_val(tensor.e_ghz, args.full_precision)
    ));
    emit(args.out.as_deref(), &csv)
}

fn parse_epsilon(s: &str) -> Result<EpsilonSpec, CliError> {
    let values: Result<Vec<f64>, _> = s.split(',').map(|p| p.trim().parse::<f64>()).collect();
    let values = values.map_err(|_| {
        CliError::Input(format!("epsilon must be comma-separated numbers, got {s:?}"))
    })?;
    match values.len() {
        1 => Ok(EpsilonSpec::Isotropic(values[0])),
        9 => {
            let mut rows = [[0.0; 3]; 3];
            for (i, v) in values.iter().enumerate() {
                rows[i / 3][i % 3] = *v;
            }
            Ok(EpsilonSpec::Tensor(rows))
        }
        n => Err(CliError::Input(format!(
            "epsilon needs 1 (isotropic) or 9 (row-major tensor) values, got {n}"
        ))),
    }
}

pub fn correction(args: &CorrectionArgs) -> Result<(), CliError> {
    let text = fs::read_to_string(&args.structure).map_err(|e| {
        CliError::Input(format!("cannot read {}: {e}", args.structure.display()))
    })?;
    let crystal = parse_structure(&text)
        .map_err(|e| CliError::Input(format!("{}: {e}", args.structure.display())))?;
    let model = DielectricModel::from_spec(&parse_epsilon(&args.epsilon)?)?;
    let result = total_correction(&crystal.lattice, args.charge, &model, args.delta_v, args.tol)?;

    let mut csv = String::from("e_image_ev,e_align_ev,e_corr_ev,eta_inv_a\n");
    csv.push_str(&format!(
        "{},{},{},{}\n",
        fmt_val(result.e_image_ev, args.full_precision),
        fmt_val(result.e_align_ev, args.full_precision),
        fmt_val(result.e_corr_ev, args.full_precision),
        fmt_val(result.eta, args.full_precision)
    ));
    emit(args.out.as_deref(), &csv)
}

pub fn screen(args: &ScreenArgs) -> Result<(), CliError> {
    let project = load_project(&args.manifest)?;
    let corrections = computed_corrections(&project, args.tol)?;
    let dossiers = assemble_dossiers(&project.manifest, &corrections)?;
    let text = report(&dossiers, &Criteria::default())?;
    emit(args.report.as_deref(), &text)
}

pub fn diagram(args: &DiagramArgs) -> Result<(), CliError> {
    let project = load_project(&args.manifest)?;
    let corrections = computed_corrections(&project, args.tol)?;
    let host = HostReference::from(&project.manifest.host);
    let entries = defect_entries(&project, &corrections);
    let rows = transition_rows(&entries, &host)?;

    let mut by_label: BTreeMap<String, Vec<(String, f64)>> = BTreeMap::new();
    for (label, level) in rows {
        if !level.in_gap {
            continue;
        }
        let frac = normalized_ctl(&level, host.e_gap_ev);
        by_label
            .entry(label)
            .or_default()
            .push((level.name(), frac));
    }
    let columns: Vec<(String, Vec<(String, f64)>)> = by_label.into_iter().collect();
    let image = svg::level_diagram(&columns, host.e_gap_ev);
    emit(args.svg.as_deref(), &image)
}
