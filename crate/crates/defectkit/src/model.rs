//! Crystal structures, supercell construction, and point-defect editing.
//!
//! Conventions used throughout the crate:
//! * lattice matrices store the three lattice vectors as **rows** (Å);
//! * fractional coordinates are row vectors, so `r_cart = f · A`;
//! * supercell transforms are integer matrices acting on the left,
//!   `A' = M · A`, with multiplicity det(M);
//! * reciprocal lattice rows satisfy `b_i · a_j = 2π δ_ij`.

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::{Matrix3, Vector3};
use thiserror::Error;

/// Fractional tolerance below which two sites count as duplicates.
pub const SITE_TOL_FRAC: f64 = 1e-6;

/// Minimum allowed distance (Å) between an inserted interstitial and any
/// existing site.
pub const INTERSTITIAL_MIN_DIST_A: f64 = 0.1;

/// Determinant below which a lattice is rejected as degenerate.
const DEGENERATE_VOLUME_A3: f64 = 1e-9;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum ModelError {
    #[error("lattice is degenerate or left-handed (det = {det:.3e} Å³)")]
    DegenerateLattice { det: f64 },
    #[error("supercell transform is singular or negatively oriented (det = {det})")]
    InvalidTransform { det: i64 },
    #[error("site index {index} out of range for crystal with {count} sites")]
    InvalidSite { index: usize, count: usize },
    #[error("inserted site collides with existing site {index} ({dist:.4} Å apart)")]
    SiteCollision { index: usize, dist: f64 },
    #[error("crystal has no sites")]
    NoSites,
    #[error("sites {first} and {second} coincide within {SITE_TOL_FRAC} fractional tolerance")]
    DuplicateSites { first: usize, second: usize },
}

/// Periodic cell: three lattice vectors stored as matrix rows, in Å.
/// Right-handed by construction (det > 0).
#[derive(Debug, Clone, PartialEq)]
pub struct Lattice {
    rows: Matrix3<f64>,
}

impl Lattice {
    pub fn from_rows(
        a1: [f64; 3],
        a2: [f64; 3],
        a3: [f64; 3],
    ) -> Result<Self, ModelError> {
        Self::from_matrix(Matrix3::from_rows(&[
            Vector3::from(a1).transpose(),
            Vector3::from(a2).transpose(),
            Vector3::from(a3).transpose(),
        ]))
    }

    pub fn from_matrix(rows: Matrix3<f64>) -> Result<Self, ModelError> {
        let det = rows.determinant();
        if !(det > DEGENERATE_VOLUME_A3) {
            return Err(ModelError::DegenerateLattice { det });
        }
        Ok(Lattice { rows })
    }

    /// Hexagonal cell with in-plane constant `a` and axial constant `c` (Å):
    /// a₁ = (a, 0, 0), a₂ = (−a/2, a√3/2, 0), a₃ = (0, 0, c).
    pub fn hexagonal(a: f64, c: f64) -> Result<Self, ModelError> {
        Self::from_rows(
            [a, 0.0, 0.0],
            [-a / 2.0, a * 3.0_f64.sqrt() / 2.0, 0.0],
            [0.0, 0.0, c],
        )
    }

    /// Cubic cell of side `a` (Å).
    pub fn cubic(a: f64) -> Result<Self, ModelError> {
        Self::from_rows([a, 0.0, 0.0], [0.0, a, 0.0], [0.0, 0.0, a])
    }

    /// Lattice vector `i` (0-based) as a Cartesian vector.
    pub fn row(&self, i: usize) -> Vector3<f64> {
        self.rows.row(i).transpose()
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.rows
    }

    /// Cell volume in Å³ (positive by the right-handedness invariant).
    pub fn volume(&self) -> f64 {
        self.rows.determinant()
    }

    /// Reciprocal lattice with rows b_i satisfying b_i · a_j = 2π δ_ij.
    pub fn reciprocal(&self) -> Lattice {
        let inv = self
            .rows
            .try_inverse()
            .expect("invertible by the non-degeneracy invariant");
        Lattice {
            rows: inv.transpose() * 2.0 * std::f64::consts::PI,
        }
    }

    /// Cartesian position of a fractional coordinate (row-vector product f·A).
    pub fn frac_to_cart(&self, frac: Vector3<f64>) -> Vector3<f64> {
        self.rows.transpose() * frac
    }

    pub fn cart_to_frac(&self, cart: Vector3<f64>) -> Vector3<f64> {
        self.rows
            .transpose()
            .try_inverse()
            .expect("invertible by the non-degeneracy invariant")
            * cart
    }

    /// Shortest Cartesian displacement equivalent to the fractional
    /// displacement `dfrac` under periodic boundary conditions. Each
    /// fractional component is wrapped into [−1/2, 1/2) and the 27
    /// neighbouring images are scanned, which is exact for all but
    /// pathologically skewed cells.
    pub fn minimum_image(&self, dfrac: Vector3<f64>) -> Vector3<f64> {
        let wrapped = dfrac.map(wrap_half);
        let mut best = self.frac_to_cart(wrapped);
        let mut best_n2 = best.norm_squared();
        for di in -1..=1 {
            for dj in -1..=1 {
                for dk in -1..=1 {
                    if di == 0 && dj == 0 && dk == 0 {
                        continue;
                    }
                    let cand = self.frac_to_cart(
                        wrapped + Vector3::new(di as f64, dj as f64, dk as f64),
                    );
                    let n2 = cand.norm_squared();
                    if n2 < best_n2 {
                        best_n2 = n2;
                        best = cand;
                    }
                }
            }
        }
        best
    }
}

/// Wrap a fractional coordinate into [0, 1).
pub fn wrap_unit(x: f64) -> f64 {
    let r = x - x.floor();
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

/// Wrap a fractional displacement into [−1/2, 1/2).
pub fn wrap_half(x: f64) -> f64 {
    let r = x - (x + 0.5).floor();
    if r >= 0.5 {
        -0.5
    } else {
        r
    }
}

/// One atomic site: species symbol plus fractional coordinate in [0, 1).
#[derive(Debug, Clone, PartialEq)]
pub struct Site {
    pub species: String,
    pub frac: Vector3<f64>,
}

impl Site {
    pub fn new(species: impl Into<String>, frac: [f64; 3]) -> Self {
        Site {
            species: species.into(),
            frac: Vector3::from(frac).map(wrap_unit),
        }
    }
}

/// A periodic crystal: lattice plus a non-empty basis of sites.
#[derive(Debug, Clone, PartialEq)]
pub struct Crystal {
    pub lattice: Lattice,
    pub sites: Vec<Site>,
}

impl Crystal {
    pub fn new(lattice: Lattice, sites: Vec<Site>) -> Result<Self, ModelError> {
        if sites.is_empty() {
            return Err(ModelError::NoSites);
        }
        let sites = sites
            .into_iter()
            .map(|s| Site {
                species: s.species,
                frac: s.frac.map(wrap_unit),
            })
            .collect();
        Ok(Crystal { lattice, sites })
    }

    /// Number of sites per species, keyed by symbol.
    pub fn species_counts(&self) -> BTreeMap<String, usize> {
        let mut counts = BTreeMap::new();
        for site in &self.sites {
            *counts.entry(site.species.clone()).or_insert(0) += 1;
        }
        counts
    }

    /// Shortest periodic distance (Å) from `frac` to site `index`.
    pub fn distance_to_site(&self, frac: Vector3<f64>, index: usize) -> f64 {
        self.lattice
            .minimum_image(self.sites[index].frac - frac)
            .norm()
    }
}

/// Integer supercell transform with positive determinant; the new lattice is
/// `A' = M · A` and the multiplicity is det(M).
#[derive(Debug, Clone, PartialEq)]
pub struct SupercellTransform {
    m: [[i64; 3]; 3],
}

impl SupercellTransform {
    pub fn new(m: [[i64; 3]; 3]) -> Result<Self, ModelError> {
        let det = det3_i64(&m);
        if det <= 0 {
            return Err(ModelError::InvalidTransform { det });
        }
        Ok(SupercellTransform { m })
    }

    /// Uniform n×n×n repetition.
    pub fn diagonal(n1: i64, n2: i64, n3: i64) -> Result<Self, ModelError> {
        Self::new([[n1, 0, 0], [0, n2, 0], [0, 0, n3]])
    }

    pub fn matrix(&self) -> &[[i64; 3]; 3] {
        &self.m
    }

    pub fn det(&self) -> i64 {
        det3_i64(&self.m)
    }

    /// Number of primitive cells contained in the supercell.
    pub fn multiplicity(&self) -> usize {
        self.det() as usize
    }
}

fn det3_i64(m: &[[i64; 3]; 3]) -> i64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

/// Adjugate of an integer 3×3 matrix: M · adj(M) = det(M) · I.
fn adjugate_i64(m: &[[i64; 3]; 3]) -> [[i64; 3]; 3] {
    let c = |r0: usize, c0: usize, r1: usize, c1: usize| -> i64 {
        m[r0][c0] * m[r1][c1] - m[r0][c1] * m[r1][c0]
    };
    // adj = cofactor matrix transposed
    [
        [c(1, 1, 2, 2), c(0, 2, 2, 1), c(0, 1, 1, 2)],
        [c(1, 2, 2, 0), c(0, 0, 2, 2), c(0, 2, 1, 0)],
        [c(1, 0, 2, 1), c(0, 1, 2, 0), c(0, 0, 1, 1)],
    ]
}

/// Build the supercell `M · A` of `crystal`, generating all det(M) lattice
/// translates of every basis site and reducing them into the new cell.
///
/// Translate enumeration is exact integer arithmetic: an old-lattice point n
/// has new-cell fractional coordinate n·M⁻¹ = n·adj(M)/det(M), so distinct
/// residues of n·adj(M) mod det(M) enumerate the translates without any
/// floating-point tolerance.
pub fn make_supercell(
    crystal: &Crystal,
    transform: &SupercellTransform,
) -> Result<Crystal, ModelError> {
    let det = transform.det();
    let m = transform.matrix();
    let adj = adjugate_i64(m);

    // Bounding box of the supercell corners in old-lattice coordinates.
    let mut lo = [0i64; 3];
    let mut hi = [0i64; 3];
    for e1 in 0..=1i64 {
        for e2 in 0..=1i64 {
            for e3 in 0..=1i64 {
                for d in 0..3 {
                    let corner = e1 * m[0][d] + e2 * m[1][d] + e3 * m[2][d];
                    lo[d] = lo[d].min(corner);
                    hi[d] = hi[d].max(corner);
                }
            }
        }
    }

    let mut residues: BTreeSet<[i64; 3]> = BTreeSet::new();
    for n1 in lo[0] - 1..=hi[0] + 1 {
        for n2 in lo[1] - 1..=hi[1] + 1 {
            for n3 in lo[2] - 1..=hi[2] + 1 {
                let n = [n1, n2, n3];
                let mut key = [0i64; 3];
                for d in 0..3 {
                    let k = n[0] * adj[0][d] + n[1] * adj[1][d] + n[2] * adj[2][d];
                    key[d] = k.rem_euclid(det);
                }
                residues.insert(key);
            }
        }
    }
    debug_assert_eq!(residues.len(), det as usize);

    let old = crystal.lattice.matrix();
    let mf = Matrix3::from_fn(|r, c| m[r][c] as f64);
    let new_lattice = Lattice::from_matrix(mf * old)?;

    // f' = f·M⁻¹ + residue/det, reduced into [0,1).
    let adj_f = Matrix3::from_fn(|r, c| adj[r][c] as f64);
    let detf = det as f64;
    let mut sites = Vec::with_capacity(crystal.sites.len() * det as usize);
    for site in &crystal.sites {
        let base = adj_f.transpose() * site.frac / detf;
        for key in &residues {
            let t = Vector3::new(key[0] as f64, key[1] as f64, key[2] as f64) / detf;
            sites.push(Site {
                species: site.species.clone(),
                frac: (base + t).map(wrap_unit),
            });
        }
    }

    for i in 0..sites.len() {
        for j in i + 1..sites.len() {
            let d = (sites[i].frac - sites[j].frac).map(wrap_half);
            if d.amax() < SITE_TOL_FRAC {
                return Err(ModelError::DuplicateSites { first: i, second: j });
            }
        }
    }

    Crystal::new(new_lattice, sites)
}

/// A point-defect edit applied to a host crystal.
#[derive(Debug, Clone, PartialEq)]
pub enum DefectSpec {
    /// Remove the site with this index.
    Vacancy { site: usize },
    /// Replace the species of the site with this index.
    Substitution { site: usize, species: String },
    /// Insert a new site at this fractional coordinate.
    Interstitial { frac: [f64; 3], species: String },
}

/// Result of a defect edit: the modified crystal plus the stoichiometry
/// change n_i (atoms added minus removed, per species) that enters the
/// formation-energy chemical-potential term.
#[derive(Debug, Clone, PartialEq)]
pub struct DefectOutcome {
    pub crystal: Crystal,
    pub delta_n: BTreeMap<String, i64>,
}

/// Apply a defect edit, recording the stoichiometry delta.
pub fn apply_defect(
    crystal: &Crystal,
    spec: &DefectSpec,
) -> Result<DefectOutcome, ModelError> {
    let mut out = crystal.clone();
    let mut delta_n: BTreeMap<String, i64> = BTreeMap::new();
    match spec {
        DefectSpec::Vacancy { site } => {
            if *site >= out.sites.len() {
                return Err(ModelError::InvalidSite {
                    index: *site,
                    count: out.sites.len(),
                });
            }
            let removed = out.sites.remove(*site);
            *delta_n.entry(removed.species).or_insert(0) -= 1;
        }
        DefectSpec::Substitution { site, species } => {
            if *site >= out.sites.len() {
                return Err(ModelError::InvalidSite {
                    index: *site,
                    count: out.sites.len(),
                });
            }
            let old = out.sites[*site].species.clone();
            if old != *species {
                *delta_n.entry(old).or_insert(0) -= 1;
                *delta_n.entry(species.clone()).or_insert(0) += 1;
                out.sites[*site].species = species.clone();
            }
        }
        DefectSpec::Interstitial { frac, species } => {
            let frac = Vector3::from(*frac).map(wrap_unit);
            for (i, _) in out.sites.iter().enumerate() {
                let d = out.distance_to_site(frac, i);
                if d < INTERSTITIAL_MIN_DIST_A {
                    return Err(ModelError::SiteCollision { index: i, dist: d });
                }
            }
            out.sites.push(Site {
                species: species.clone(),
                frac,
            });
            *delta_n.entry(species.clone()).or_insert(0) += 1;
        }
    }
    delta_n.retain(|_, v| *v != 0);
    if out.sites.is_empty() {
        return Err(ModelError::NoSites);
    }
    Ok(DefectOutcome {
        crystal: out,
        delta_n,
    })
}
