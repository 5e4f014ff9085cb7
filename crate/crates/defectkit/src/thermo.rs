//! Defect thermodynamics: formation energies, chemical-potential limits,
//! charge transition levels, and stable-charge-state profiles over the gap.
//!
//! Conventions: all energies in eV; the Fermi level is measured from the
//! valence-band maximum; a defect's formation energy is
//!
//! ```text
//! E_form = E_tot[defect] − E_tot[bulk] − Σ_i n_i (μ_ref,i + Δμ_i)
//!          + q (E_VBM + E_F) + E_corr
//! ```
//!
//! with `n_i` the atoms added (+) or removed (−) per species.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::io::{DefectRecord, HostBlock, Multiplicity};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ThermoError {
    #[error("chemical-potential parameter λ = {lambda} outside [0, 1]")]
    Range { lambda: f64 },
    #[error("host formation enthalpy must be negative for a stable compound, got {delta_h_ev} eV")]
    UnstableHost { delta_h_ev: f64 },
    #[error("no reference chemical potential for species {species:?}")]
    MissingChemicalPotential { species: String },
    #[error("cannot form a transition level between two {label} entries with the same charge {charge}")]
    DegenerateTransition { label: String, charge: i32 },
    #[error("transition level requires entries of the same defect, got {a:?} and {b:?}")]
    LabelMismatch { a: String, b: String },
    #[error("entries for {label} disagree on stoichiometry; the transition level would depend on growth conditions")]
    StoichiometryMismatch { label: String },
    #[error("no defect entries supplied")]
    EmptyInput,
}

/// Host-crystal quantities every formation energy is measured against.
#[derive(Debug, Clone, PartialEq)]
pub struct HostReference {
    pub e_bulk_ev: f64,
    pub e_vbm_ev: f64,
    pub e_gap_ev: f64,
    pub delta_h_form_ev: f64,
    pub mu_ref_ev: BTreeMap<String, f64>,
}

impl From<&HostBlock> for HostReference {
    fn from(h: &HostBlock) -> Self {
        HostReference {
            e_bulk_ev: h.e_total_ev,
            e_vbm_ev: h.e_vbm_ev,
            e_gap_ev: h.e_gap_ev,
            delta_h_form_ev: h.delta_h_form_ev,
            mu_ref_ev: h.mu_ref_ev.clone(),
        }
    }
}

/// A point on the allowed chemical-potential segment, parametrized by
/// λ ∈ [0, 1] from nitrogen-rich (λ = 0) to boron-rich (λ = 1) growth.
#[derive(Debug, Clone, PartialEq)]
pub struct ChemPotentialPoint {
    pub lambda: f64,
    /// Δμ per species; species absent from the map sit at their elemental
    /// reference (Δμ = 0).
    pub delta_mu_ev: BTreeMap<String, f64>,
}

impl ChemPotentialPoint {
    pub fn delta_mu(&self, species: &str) -> f64 {
        self.delta_mu_ev.get(species).copied().unwrap_or(0.0)
    }
}

/// Chemical potentials along the equilibrium segment: the two host species
/// split the formation enthalpy, Δμ_B + Δμ_N = ΔH, with
/// λ = 0 → N-rich (Δμ_N = 0) and λ = 1 → B-rich (Δμ_B = 0).
pub fn chem_potentials(host: &HostReference, lambda: f64) -> Result<ChemPotentialPoint, ThermoError> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(ThermoError::Range { lambda });
    }
    let dh = host.delta_h_form_ev;
    if dh > 0.0 {
        return Err(ThermoError::UnstableHost { delta_h_ev: dh });
    }
    let mut delta_mu_ev = BTreeMap::new();
    delta_mu_ev.insert("B".to_string(), (1.0 - lambda) * dh);
    delta_mu_ev.insert("N".to_string(), lambda * dh);
    Ok(ChemPotentialPoint {
        lambda,
        delta_mu_ev,
    })
}

/// One defect in one charge state, ready for formation-energy evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct DefectEntry {
    pub label: String,
    pub charge: i32,
    pub e_total_ev: f64,
    pub delta_n: BTreeMap<String, i64>,
    pub e_corr_ev: f64,
    pub multiplicity: Multiplicity,
}

impl DefectEntry {
    /// Build from a manifest record with the finite-size correction already
    /// resolved to a number (zero for neutral entries, the explicit or
    /// separately computed value for charged ones).
    pub fn from_record(record: &DefectRecord, e_corr_ev: f64) -> DefectEntry {
        DefectEntry {
            label: record.label.clone(),
            charge: record.charge,
            e_total_ev: record.e_total_ev,
            delta_n: record.delta_n.clone(),
            e_corr_ev,
            multiplicity: record.multiplicity,
        }
    }

    /// Stable display label, e.g. `V_B^-1`.
    pub fn charged_label(&self) -> String {
        match self.charge.cmp(&0) {
            std::cmp::Ordering::Greater => format!("{}^+{}", self.label, self.charge),
            std::cmp::Ordering::Equal => format!("{}^0", self.label),
            std::cmp::Ordering::Less => format!("{}^{}", self.label, self.charge),
        }
    }
}

/// Formation energy at Fermi level `e_fermi_ev` above the VBM.
///
/// `e_fermi_ev` is not range-checked: callers plotting outside [0, E_gap]
/// are expected to warn, not fail.
pub fn formation_energy(
    entry: &DefectEntry,
    host: &HostReference,
    mu: &ChemPotentialPoint,
    e_fermi_ev: f64,
) -> Result<f64, ThermoError> {
    let mut e = entry.e_total_ev - host.e_bulk_ev
        + entry.charge as f64 * (host.e_vbm_ev + e_fermi_ev)
        + entry.e_corr_ev;
    for (species, &n) in &entry.delta_n {
        if n == 0 {
            continue;
        }
        let mu_ref = host
            .mu_ref_ev
            .get(species)
            .ok_or_else(|| ThermoError::MissingChemicalPotential {
                species: species.clone(),
            })?;
        e -= n as f64 * (mu_ref + mu.delta_mu(species));
    }
    Ok(e)
}

/// A charge transition level: the Fermi energy where the formation-energy
/// lines of two charge states cross. Below it the more positive charge
/// (`q_high`) is the lower line.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionLevel {
    pub label: String,
    pub q_high: i32,
    pub q_low: i32,
    /// Crossing Fermi energy, eV above the VBM.
    pub epsilon_ev: f64,
    /// True when the level falls inside [0, E_gap].
    pub in_gap: bool,
}

fn charge_name(q: i32) -> String {
    match q.cmp(&0) {
        std::cmp::Ordering::Greater => format!("{q}+"),
        std::cmp::Ordering::Equal => "0".to_string(),
        std::cmp::Ordering::Less => format!("{}-", -q),
    }
}

impl TransitionLevel {
    /// Conventional name, lower charge first: `(1-/0)`, `(2-/1-)`, `(0/1+)`.
    pub fn name(&self) -> String {
        format!("({}/{})", charge_name(self.q_low), charge_name(self.q_high))
    }
}

/// Transition level ε(a/b) between two charge states of the same defect.
///
/// The chemical-potential terms are identical on both sides (the two
/// entries must share a stoichiometry — checked, so the result cannot
/// depend on growth conditions) and cancel analytically:
/// ε = [E_a + E_corr,a − E_b − E_corr,b]/(q_b − q_a) − E_VBM-shift terms,
/// evaluated here as the crossing of the two lines at E_F measured from
/// the VBM.
pub fn charge_transition_level(
    a: &DefectEntry,
    b: &DefectEntry,
    host: &HostReference,
) -> Result<TransitionLevel, ThermoError> {
    if a.label != b.label {
        return Err(ThermoError::LabelMismatch {
            a: a.label.clone(),
            b: b.label.clone(),
        });
    }
    if a.charge == b.charge {
        return Err(ThermoError::DegenerateTransition {
            label: a.label.clone(),
            charge: a.charge,
        });
    }
    if a.delta_n != b.delta_n {
        return Err(ThermoError::StoichiometryMismatch {
            label: a.label.clone(),
        });
    }
    // E_form(q; E_F=0) up to the shared μ terms.
    let base = |e: &DefectEntry| {
        e.e_total_ev - host.e_bulk_ev + e.charge as f64 * host.e_vbm_ev + e.e_corr_ev
    };
    let epsilon_ev = (base(a) - base(b)) / (b.charge - a.charge) as f64;
    let (q_high, q_low) = if a.charge > b.charge {
        (a.charge, b.charge)
    } else {
        (b.charge, a.charge)
    };
    Ok(TransitionLevel {
        label: a.label.clone(),
        q_high,
        q_low,
        epsilon_ev,
        in_gap: (0.0..=host.e_gap_ev).contains(&epsilon_ev),
    })
}

/// ε expressed as a fraction of the gap.
pub fn normalized_ctl(level: &TransitionLevel, e_gap_ev: f64) -> f64 {
    assert!(e_gap_ev > 0.0, "band gap must be positive");
    level.epsilon_ev / e_gap_ev
}

/// One piece of the stable-charge profile: `charge` has the lowest
/// formation energy for E_F in [start, end].
#[derive(Debug, Clone, PartialEq)]
pub struct StableInterval {
    pub e_f_start_ev: f64,
    pub e_f_end_ev: f64,
    pub charge: i32,
    pub multiplicity: Multiplicity,
}

/// Lower envelope of the formation-energy lines of one defect over
/// E_F ∈ [0, E_gap].
///
/// The returned intervals partition the gap; charges are strictly
/// decreasing left to right (convexity of the envelope). Charge states
/// never lowest anywhere are absent. Duplicate entries for the same charge
/// keep the lower-energy one; zero-length intervals at coincident
/// crossings are dropped, which is equivalent to reporting the surviving
/// charge closest to zero at the degenerate point.
pub fn stable_charge_profile(
    entries: &[DefectEntry],
    host: &HostReference,
    mu: &ChemPotentialPoint,
) -> Result<Vec<StableInterval>, ThermoError> {
    if entries.is_empty() {
        return Err(ThermoError::EmptyInput);
    }
    let label = &entries[0].label;
    if let Some(other) = entries.iter().find(|e| &e.label != label) {
        return Err(ThermoError::LabelMismatch {
            a: label.clone(),
            b: other.label.clone(),
        });
    }

    // One line y(E_F) = b + q·E_F per charge; duplicates keep the lower b.
    let mut lines: BTreeMap<i32, (f64, Multiplicity)> = BTreeMap::new();
    for e in entries {
        let b = formation_energy(e, host, mu, 0.0)?;
        match lines.get(&e.charge) {
            Some(&(existing, _)) if existing <= b => {}
            _ => {
                lines.insert(e.charge, (b, e.multiplicity));
            }
        }
    }
    let lines: Vec<(i32, f64, Multiplicity)> =
        lines.into_iter().map(|(q, (b, m))| (q, b, m)).collect();

    let value = |i: usize, e_f: f64| lines[i].1 + lines[i].0 as f64 * e_f;

    // Entry line at E_F = 0: lowest value; exact ties go to the smallest
    // charge, whose smaller slope keeps it lowest just inside the gap.
    let mut cur = 0;
    for i in 1..lines.len() {
        let (vi, vc) = (value(i, 0.0), value(cur, 0.0));
        if vi < vc || (vi == vc && lines[i].0 < lines[cur].0) {
            cur = i;
        }
    }

    let e_gap = host.e_gap_ev;
    let mut out = Vec::new();
    let mut e_cur = 0.0;
    loop {
        // Earliest crossing with a lower-slope line strictly inside the gap.
        let mut next: Option<(f64, usize)> = None;
        for (i, &(q, b, _)) in lines.iter().enumerate() {
            if q >= lines[cur].0 {
                continue;
            }
            let e_cross = (b - lines[cur].1) / (lines[cur].0 - q) as f64;
            if e_cross > e_cur && e_cross < e_gap {
                let better = match next {
                    None => true,
                    Some((e_best, j)) => {
                        e_cross < e_best || (e_cross == e_best && q < lines[j].0)
                    }
                };
                if better {
                    next = Some((e_cross, i));
                }
            }
        }
        match next {
            Some((e_cross, i)) => {
                out.push(StableInterval {
                    e_f_start_ev: e_cur,
                    e_f_end_ev: e_cross,
                    charge: lines[cur].0,
                    multiplicity: lines[cur].2,
                });
                e_cur = e_cross;
                cur = i;
            }
            None => {
                out.push(StableInterval {
                    e_f_start_ev: e_cur,
                    e_f_end_ev: e_gap,
                    charge: lines[cur].0,
                    multiplicity: lines[cur].2,
                });
                return Ok(out);
            }
        }
    }
}

/// A vertex of a formation-energy lower envelope.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvelopeVertex {
    pub e_f_ev: f64,
    pub e_form_ev: f64,
}

/// A kink of the envelope: the in-gap transition level between two
/// successively stable charges.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KinkMarker {
    pub e_f_ev: f64,
    /// Stable charge below the kink (more positive).
    pub q_high: i32,
    /// Stable charge above the kink.
    pub q_low: i32,
}

/// The drawable lower envelope of one defect.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagramPolyline {
    pub label: String,
    pub vertices: Vec<EnvelopeVertex>,
    pub kinks: Vec<KinkMarker>,
}

/// Envelope polylines for a mixed set of entries, grouped by defect label,
/// ordered by label then Fermi energy. An empty input yields an empty set.
pub fn diagram_data(
    entries: &[DefectEntry],
    host: &HostReference,
    mu: &ChemPotentialPoint,
) -> Result<Vec<DiagramPolyline>, ThermoError> {
    let mut groups: BTreeMap<&str, Vec<&DefectEntry>> = BTreeMap::new();
    for e in entries {
        groups.entry(&e.label).or_default().push(e);
    }
    let mut out = Vec::new();
    for (label, group) in groups {
        let owned: Vec<DefectEntry> = group.iter().map(|&e| e.clone()).collect();
        let profile = stable_charge_profile(&owned, host, mu)?;
        // The same per-charge lines the profile was built from.
        let mut intercepts: BTreeMap<i32, f64> = BTreeMap::new();
        for e in &owned {
            let b = formation_energy(e, host, mu, 0.0)?;
            intercepts
                .entry(e.charge)
                .and_modify(|cur| *cur = cur.min(b))
                .or_insert(b);
        }
        let envelope = |q: i32, e_f: f64| intercepts[&q] + q as f64 * e_f;
        let mut vertices = Vec::with_capacity(profile.len() + 1);
        let mut kinks = Vec::new();
        for (i, seg) in profile.iter().enumerate() {
            if i == 0 {
                vertices.push(EnvelopeVertex {
                    e_f_ev: seg.e_f_start_ev,
                    e_form_ev: envelope(seg.charge, seg.e_f_start_ev),
                });
            } else {
                kinks.push(KinkMarker {
                    e_f_ev: seg.e_f_start_ev,
                    q_high: profile[i - 1].charge,
                    q_low: seg.charge,
                });
            }
            vertices.push(EnvelopeVertex {
                e_f_ev: seg.e_f_end_ev,
                e_form_ev: envelope(seg.charge, seg.e_f_end_ev),
            });
        }
        out.push(DiagramPolyline {
            label: label.to_string(),
            vertices,
            kinks,
        });
    }
    Ok(out)
}
