//! Optical transitions: plane-wave transition dipole moments, k-point
//! averaging, radiative lifetimes, zero-phonon-line bookkeeping, and
//! bound-exciton stability.
//!
//! The dipole moment between bands i and f at one k-point is
//!
//! ```text
//! μ_k = i ħ² / [m_e (ε_f − ε_i)] · Σ_G c_f*(G) (k+G) c_i(G)
//! ```
//!
//! in e·Å, with the momentum operator applied in the plane-wave basis only
//! (no nonlocal-potential commutator correction — a documented limit of the
//! method). The overall phase of μ_k is gauge; only |μ_k| is physical.
//!
//! Lifetimes follow the Wigner–Weisskopf form
//! 1/τ = n_r (2π)³ ν³ |μ̄|² / (3 ε₀ h c³) with ν³ (dimensional necessity);
//! [`LifetimeConvention::StandardA`] doubles the rate for comparison with
//! the textbook Einstein-A normalization, since the literature prefactor
//! cannot be pinned down to that factor.

use nalgebra::Vector3;
use num_complex::Complex64;
use thiserror::Error;

use crate::constants::{
    ELEMENTARY_CHARGE_C, EV_TO_J, HBAR2_OVER_ME_EV_A2, PLANCK_J_S, SPEED_OF_LIGHT_M_S,
    VACUUM_PERMITTIVITY_F_M,
};
use crate::io::{TransitionKind, WavefunctionSet, ZplEntry, WEIGHT_TOL};

/// Two eigenvalues closer than this (eV) leave the dipole prefactor
/// undefined.
const DEGENERACY_TOL_EV: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OpticsError {
    #[error("spin channel {index} out of range ({count} channels)")]
    InvalidSpin { index: usize, count: usize },
    #[error("k-point {index} out of range ({count} k-points)")]
    InvalidKpoint { index: usize, count: usize },
    #[error("band {index} out of range ({count} bands)")]
    InvalidBand { index: usize, count: usize },
    #[error(
        "bands {band_initial} and {band_final} are degenerate at (spin {spin}, k-point {kpoint}); the dipole prefactor is undefined"
    )]
    DegenerateEnergies {
        spin: usize,
        kpoint: usize,
        band_initial: usize,
        band_final: usize,
    },
    #[error("{dipoles} dipole moments but {weights} weights")]
    LengthMismatch { dipoles: usize, weights: usize },
    #[error("k-point weights sum to {sum}, expected 1")]
    WeightSum { sum: f64 },
    #[error("invalid input: {message}")]
    Domain { message: String },
    #[error("zero transition dipole: the state does not decay radiatively")]
    InfiniteLifetime,
    #[error("invalid transition record: {message}")]
    InvalidRecord { message: String },
}

/// A band-to-band transition within one spin channel (the dipole couples
/// states at the same k-point).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TransitionSpec {
    pub spin: usize,
    pub band_initial: usize,
    pub band_final: usize,
}

/// μ_k between the two bands of `spec` at `kpoint`, in e·Å.
pub fn transition_dipole(
    wfs: &WavefunctionSet,
    spec: &TransitionSpec,
    kpoint: usize,
) -> Result<Vector3<Complex64>, OpticsError> {
    if spec.spin >= wfs.n_spins() {
        return Err(OpticsError::InvalidSpin {
            index: spec.spin,
            count: wfs.n_spins(),
        });
    }
    if kpoint >= wfs.n_kpoints() {
        return Err(OpticsError::InvalidKpoint {
            index: kpoint,
            count: wfs.n_kpoints(),
        });
    }
    for band in [spec.band_initial, spec.band_final] {
        if band >= wfs.n_bands() {
            return Err(OpticsError::InvalidBand {
                index: band,
                count: wfs.n_bands(),
            });
        }
    }
    let block = wfs.block(spec.spin, kpoint);
    let initial = &block.bands[spec.band_initial];
    let final_ = &block.bands[spec.band_final];
    let de = final_.eigenvalue_ev - initial.eigenvalue_ev;
    if de.abs() < DEGENERACY_TOL_EV {
        return Err(OpticsError::DegenerateEnergies {
            spin: spec.spin,
            kpoint,
            band_initial: spec.band_initial,
            band_final: spec.band_final,
        });
    }

    let mut p = Vector3::<Complex64>::zeros();
    for (idx, (cf, ci)) in final_
        .coefficients
        .iter()
        .zip(&initial.coefficients)
        .enumerate()
    {
        let overlap = cf.conj() * ci;
        let kg = block.k_plus_g_cart(wfs.lattice(), idx);
        p += Vector3::new(overlap * kg.x, overlap * kg.y, overlap * kg.z);
    }
    let prefactor = Complex64::i() * (HBAR2_OVER_ME_EV_A2 / de);
    Ok(p.map(|c| c * prefactor))
}

/// Weighted root-mean-square magnitude μ̄ = √(Σ_k w_k |μ_k|²), e·Å — the
/// reading of a "k-averaged dipole" that keeps |μ̄|² well-defined for
/// complex vectors.
pub fn kpoint_average(
    dipoles: &[Vector3<Complex64>],
    weights: &[f64],
) -> Result<f64, OpticsError> {
    if dipoles.len() != weights.len() {
        return Err(OpticsError::LengthMismatch {
            dipoles: dipoles.len(),
            weights: weights.len(),
        });
    }
    let sum: f64 = weights.iter().sum();
    if (sum - 1.0).abs() > WEIGHT_TOL {
        return Err(OpticsError::WeightSum { sum });
    }
    Ok(dipoles
        .iter()
        .zip(weights)
        .map(|(mu, &w)| w * mu.iter().map(|c| c.norm_sqr()).sum::<f64>())
        .sum::<f64>()
        .sqrt())
}

/// μ̄ for a transition over every k-point of the set.
pub fn averaged_transition_dipole(
    wfs: &WavefunctionSet,
    spec: &TransitionSpec,
) -> Result<f64, OpticsError> {
    let mut dipoles = Vec::with_capacity(wfs.n_kpoints());
    let mut weights = Vec::with_capacity(wfs.n_kpoints());
    for k in 0..wfs.n_kpoints() {
        dipoles.push(transition_dipole(wfs, spec, k)?);
        weights.push(wfs.block(spec.spin, k).weight);
    }
    kpoint_average(&dipoles, &weights)
}

/// Combine the μ̄ of transitions into the partners of a degenerate final
/// state in quadrature (the partners decay independently).
pub fn combine_degenerate_dipoles(magnitudes: &[f64]) -> f64 {
    magnitudes.iter().map(|m| m * m).sum::<f64>().sqrt()
}

/// Overall normalization of the spontaneous-emission rate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LifetimeConvention {
    /// 1/τ = n_r (2π)³ ν³ |μ̄|² / (3 ε₀ h c³).
    #[default]
    AsPrinted,
    /// Twice the [`LifetimeConvention::AsPrinted`] rate (the Einstein-A
    /// normalization with μ in the amplitude convention).
    StandardA,
}

/// Radiative lifetime in ns for a transition of energy `e_transition_ev`,
/// k-averaged dipole `mu_e_a` (e·Å), in a medium of refractive index `n_r`.
pub fn radiative_lifetime(
    e_transition_ev: f64,
    mu_e_a: f64,
    n_r: f64,
    convention: LifetimeConvention,
) -> Result<f64, OpticsError> {
    let domain = |message: String| Err(OpticsError::Domain { message });
    if !(e_transition_ev > 0.0) {
        return domain(format!(
            "transition energy must be positive, got {e_transition_ev} eV"
        ));
    }
    if !(mu_e_a >= 0.0) {
        return domain(format!("dipole magnitude must be non-negative, got {mu_e_a} e·Å"));
    }
    if !(n_r >= 1.0) {
        return domain(format!("refractive index must be ≥ 1, got {n_r}"));
    }
    if mu_e_a == 0.0 {
        return Err(OpticsError::InfiniteLifetime);
    }
    let nu_hz = e_transition_ev * EV_TO_J / PLANCK_J_S;
    let mu_c_m = mu_e_a * ELEMENTARY_CHARGE_C * 1e-10;
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut rate_per_s = n_r * two_pi.powi(3) * nu_hz.powi(3) * mu_c_m * mu_c_m
        / (3.0 * VACUUM_PERMITTIVITY_F_M * PLANCK_J_S * SPEED_OF_LIGHT_M_S.powi(3));
    if convention == LifetimeConvention::StandardA {
        rate_per_s *= 2.0;
    }
    Ok(1e9 / rate_per_s)
}

/// A transition energy with an attached plausibility warning.
#[derive(Debug, Clone, PartialEq)]
pub struct ZplEnergy {
    pub e_zpl_ev: f64,
    pub warning: Option<String>,
}

/// Zero-phonon-line energy from the relaxed total energies of the excited
/// and ground configurations (which must come from the same supercell and
/// functional — this function can only check the sign).
pub fn zpl(e_excited_relaxed_ev: f64, e_ground_relaxed_ev: f64) -> ZplEnergy {
    let e_zpl_ev = e_excited_relaxed_ev - e_ground_relaxed_ev;
    let warning = (e_zpl_ev <= 0.0).then(|| {
        format!(
            "non-positive transition energy {e_zpl_ev} eV: the configurations are inverted or inconsistently relaxed"
        )
    });
    ZplEnergy { e_zpl_ev, warning }
}

/// Bound-exciton stability: how far the optical transition sits above the
/// charge transition level it would dissociate through.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundExcitonStability {
    pub bes_ev: f64,
    /// Strictly positive stability only; the boundary dissociates.
    pub stable: bool,
}

pub fn bound_exciton_stability(zpl_ev: f64, ctl_ev: f64) -> BoundExcitonStability {
    let bes_ev = zpl_ev - ctl_ev;
    BoundExcitonStability {
        bes_ev,
        stable: bes_ev > 0.0,
    }
}

/// A validated optical-transition summary for one defect.
///
/// Level-to-band (LD) records always carry a bound-exciton stability;
/// level-to-level (LL) records never do.
#[derive(Debug, Clone, PartialEq)]
pub struct ZplRecord {
    pub label: String,
    pub kind: TransitionKind,
    pub e_zpl_ev: f64,
    pub lifetime_ns: Option<f64>,
    pub bes: Option<BoundExcitonStability>,
}

impl ZplRecord {
    pub fn new(
        label: String,
        kind: TransitionKind,
        e_zpl_ev: f64,
        lifetime_ns: Option<f64>,
        bes: Option<BoundExcitonStability>,
    ) -> Result<Self, OpticsError> {
        if !(e_zpl_ev > 0.0) {
            return Err(OpticsError::InvalidRecord {
                message: format!("transition energy must be positive, got {e_zpl_ev} eV"),
            });
        }
        match (kind, bes.is_some()) {
            (TransitionKind::LD, false) => Err(OpticsError::InvalidRecord {
                message: "level-to-band records need a bound-exciton stability".into(),
            }),
            (TransitionKind::LL, true) => Err(OpticsError::InvalidRecord {
                message: "level-to-level records cannot carry a bound-exciton stability".into(),
            }),
            _ => Ok(ZplRecord {
                label,
                kind,
                e_zpl_ev,
                lifetime_ns,
                bes,
            }),
        }
    }

    /// Build from a manifest entry, deriving the stability of a
    /// level-to-band transition from its recorded transition level.
    pub fn from_manifest(label: &str, entry: &ZplEntry) -> Result<Self, OpticsError> {
        let e_zpl_ev = entry.zpl_ev();
        let bes = match entry.kind {
            TransitionKind::LD => Some(bound_exciton_stability(
                e_zpl_ev,
                entry.ctl_reference_ev.expect("validated at manifest load"),
            )),
            TransitionKind::LL => None,
        };
        ZplRecord::new(label.to_string(), entry.kind, e_zpl_ev, entry.lifetime_ns, bes)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::{Band, SpinKBlock};
    use crate::model::Lattice;
    use approx::assert_relative_eq;
    use rand::{RngExt, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const L: f64 = 10.0;

    /// One k-point, one spin, bands from (eigenvalue, coefficient) pairs on
    /// a fixed G basis.
    fn toy_set(
        k_frac: [f64; 3],
        gvectors: Vec<[i32; 3]>,
        bands: Vec<(f64, Vec<Complex64>)>,
    ) -> WavefunctionSet {
        WavefunctionSet::new(
            Lattice::cubic(L).unwrap(),
            200.0,
            vec![vec![SpinKBlock {
                k_frac: Vector3::from(k_frac.map(|x| x)),
                weight: 1.0,
                gvectors,
                bands: bands
                    .into_iter()
                    .map(|(eigenvalue_ev, coefficients)| Band {
                        eigenvalue_ev,
                        occupation: 1.0,
                        coefficients,
                    })
                    .collect(),
            }]],
        )
        .unwrap()
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn orthogonal_plane_waves_have_zero_dipole() {
        let wfs = toy_set(
            [0.0; 3],
            vec![[0, 0, 0], [1, 0, 0]],
            vec![
                (0.0, vec![c(1.0, 0.0), c(0.0, 0.0)]),
                (1.0, vec![c(0.0, 0.0), c(1.0, 0.0)]),
            ],
        );
        let mu = transition_dipole(
            &wfs,
            &TransitionSpec {
                spin: 0,
                band_initial: 0,
                band_final: 1,
            },
            0,
        )
        .unwrap();
        assert_eq!(mu.iter().map(|x| x.norm()).sum::<f64>(), 0.0);
    }

    #[test]
    fn symmetric_two_wave_states_match_hand_value() {
        // c_i = (1/√2, −1/√2), c_f = (1/√2, 1/√2) on G ∈ {0, x̂}:
        // Σ c_f* (k+G) c_i = −G₁/2; |μ| = (ħ²/m_e)·(2π/L)/(2·Δε).
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let wfs = toy_set(
            [0.0; 3],
            vec![[0, 0, 0], [1, 0, 0]],
            vec![
                (0.0, vec![c(s, 0.0), c(-s, 0.0)]),
                (1.0, vec![c(s, 0.0), c(s, 0.0)]),
            ],
        );
        let mu = transition_dipole(
            &wfs,
            &TransitionSpec {
                spin: 0,
                band_initial: 0,
                band_final: 1,
            },
            0,
        )
        .unwrap();
        let expect = HBAR2_OVER_ME_EV_A2 * (2.0 * std::f64::consts::PI / L) / 2.0;
        assert_relative_eq!(mu.x.norm(), expect, epsilon = 1e-12);
        assert_eq!((mu.y, mu.z), (c(0.0, 0.0), c(0.0, 0.0)));
        // The prefactor i times the real negative sum lands on the
        // negative imaginary axis.
        assert_relative_eq!(mu.x.im, -expect, epsilon = 1e-12);
    }

    #[test]
    fn same_band_is_degenerate() {
        let wfs = toy_set(
            [0.0; 3],
            vec![[0, 0, 0]],
            vec![(0.0, vec![c(1.0, 0.0)]), (0.0, vec![c(0.0, 1.0)])],
        );
        for (i, f) in [(0, 0), (0, 1)] {
            assert!(matches!(
                transition_dipole(
                    &wfs,
                    &TransitionSpec {
                        spin: 0,
                        band_initial: i,
                        band_final: f,
                    },
                    0
                ),
                Err(OpticsError::DegenerateEnergies { .. })
            ));
        }
    }

    #[test]
    fn out_of_range_indices_reported() {
        let wfs = toy_set(
            [0.0; 3],
            vec![[0, 0, 0]],
            vec![(0.0, vec![c(1.0, 0.0)]), (1.0, vec![c(0.0, 1.0)])],
        );
        let spec = TransitionSpec {
            spin: 0,
            band_initial: 0,
            band_final: 5,
        };
        assert!(matches!(
            transition_dipole(&wfs, &spec, 0),
            Err(OpticsError::InvalidBand { index: 5, count: 2 })
        ));
        let spec = TransitionSpec {
            spin: 1,
            band_initial: 0,
            band_final: 1,
        };
        assert!(matches!(
            transition_dipole(&wfs, &spec, 0),
            Err(OpticsError::InvalidSpin { .. })
        ));
        let spec = TransitionSpec {
            spin: 0,
            band_initial: 0,
            band_final: 1,
        };
        assert!(matches!(
            transition_dipole(&wfs, &spec, 3),
            Err(OpticsError::InvalidKpoint { .. })
        ));
    }

    fn random_two_band_set(seed: u64) -> WavefunctionSet {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let gvectors = vec![[0, 0, 0], [1, 0, 0], [0, 1, 0], [-1, 0, 1]];
        let mut band = || {
            let mut coeff: Vec<Complex64> = (0..4)
                .map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
                .collect();
            let norm: f64 = coeff.iter().map(|x| x.norm_sqr()).sum();
            let s = norm.sqrt().recip();
            coeff.iter_mut().for_each(|x| *x *= s);
            coeff
        };
        let b0 = band();
        let b1 = band();
        toy_set([0.1, -0.2, 0.05], gvectors, vec![(0.0, b0), (1.7, b1)])
    }

    #[test]
    fn dipole_magnitude_is_hermitian() {
        for seed in 0..10 {
            let wfs = random_two_band_set(seed);
            let fwd = transition_dipole(
                &wfs,
                &TransitionSpec {
                    spin: 0,
                    band_initial: 0,
                    band_final: 1,
                },
                0,
            )
            .unwrap();
            let bwd = transition_dipole(
                &wfs,
                &TransitionSpec {
                    spin: 0,
                    band_initial: 1,
                    band_final: 0,
                },
                0,
            )
            .unwrap();
            let norm = |v: &Vector3<Complex64>| {
                v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
            };
            assert_relative_eq!(norm(&fwd), norm(&bwd), epsilon = 1e-10);
        }
    }

    #[test]
    fn global_phase_leaves_magnitude_unchanged() {
        let wfs = random_two_band_set(3);
        let spec = TransitionSpec {
            spin: 0,
            band_initial: 0,
            band_final: 1,
        };
        let base = transition_dipole(&wfs, &spec, 0).unwrap();

        // Rebuild with the final band rotated by a global phase.
        let phase = Complex64::from_polar(1.0, 1.234);
        let block = wfs.block(0, 0);
        let mut bands: Vec<(f64, Vec<Complex64>)> = block
            .bands
            .iter()
            .map(|b| (b.eigenvalue_ev, b.coefficients.clone()))
            .collect();
        bands[1].1.iter_mut().for_each(|x| *x *= phase);
        let k = [block.k_frac.x, block.k_frac.y, block.k_frac.z];
        let rotated = toy_set(k, block.gvectors.clone(), bands);
        let turned = transition_dipole(&rotated, &spec, 0).unwrap();

        let norm = |v: &Vector3<Complex64>| v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        assert_relative_eq!(norm(&base), norm(&turned), epsilon = 1e-12);
    }

    #[test]
    fn kpoint_average_trivial_and_weighted() {
        let x = |m: f64| Vector3::new(c(m, 0.0), c(0.0, 0.0), c(0.0, 0.0));
        assert_relative_eq!(kpoint_average(&[x(0.3)], &[1.0]).unwrap(), 0.3);
        assert_relative_eq!(
            kpoint_average(&[x(0.0), x(0.4)], &[0.5, 0.5]).unwrap(),
            0.08f64.sqrt(),
            epsilon = 1e-15
        );
    }

    #[test]
    fn kpoint_average_matches_direct_rms() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let dipoles: Vec<Vector3<Complex64>> = (0..4)
            .map(|_| {
                Vector3::new(
                    c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)),
                    c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)),
                    c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)),
                )
            })
            .collect();
        let weights = [0.1, 0.2, 0.3, 0.4];
        let direct: f64 = dipoles
            .iter()
            .zip(&weights)
            .map(|(v, &w)| {
                w * (v.x.norm_sqr() + v.y.norm_sqr() + v.z.norm_sqr())
            })
            .sum::<f64>()
            .sqrt();
        assert_relative_eq!(
            kpoint_average(&dipoles, &weights).unwrap(),
            direct,
            epsilon = 1e-15
        );
    }

    #[test]
    fn bad_weights_rejected() {
        let v = Vector3::new(c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0));
        assert!(matches!(
            kpoint_average(&[v, v], &[0.5, 0.6]),
            Err(OpticsError::WeightSum { .. })
        ));
        assert!(matches!(
            kpoint_average(&[v], &[0.5, 0.5]),
            Err(OpticsError::LengthMismatch { .. })
        ));
    }

    #[test]
    fn quadrature_combination() {
        assert_relative_eq!(combine_degenerate_dipoles(&[3.0, 4.0]), 5.0);
        assert_eq!(combine_degenerate_dipoles(&[]), 0.0);
    }

    #[test]
    fn zero_dipole_never_decays() {
        assert!(matches!(
            radiative_lifetime(1.62, 0.0, 2.1, LifetimeConvention::AsPrinted),
            Err(OpticsError::InfiniteLifetime)
        ));
    }

    #[test]
    fn lifetime_round_trips_through_inverted_dipoles() {
        // Dipoles inverted from the rate formula for known (energy,
        // lifetime) pairs with n_r = 2.1, frozen in debye.
        use crate::constants::DEBYE_E_A;
        let cases = [
            (1.62, 1.5274, 583.50),
            (1.01, 9.5279, 61.88),
            (0.63, 9.6999, 246.01),
            (1.61, 4.1699, 79.76),
        ];
        for (e_ev, mu_debye, tau_ns) in cases {
            let tau = radiative_lifetime(
                e_ev,
                mu_debye * DEBYE_E_A,
                2.1,
                LifetimeConvention::AsPrinted,
            )
            .unwrap();
            assert_relative_eq!(tau, tau_ns, max_relative = 1e-3);
        }
    }

    #[test]
    fn doubling_frequency_divides_lifetime_by_eight() {
        let t1 = radiative_lifetime(1.0, 0.5, 1.5, LifetimeConvention::AsPrinted).unwrap();
        let t2 = radiative_lifetime(2.0, 0.5, 1.5, LifetimeConvention::AsPrinted).unwrap();
        assert_relative_eq!(t1 / t2, 8.0, max_relative = 1e-10);
    }

    #[test]
    fn lifetime_monotone_in_dipole_and_frequency() {
        let t = |e: f64, m: f64| {
            radiative_lifetime(e, m, 2.1, LifetimeConvention::AsPrinted).unwrap()
        };
        assert!(t(1.0, 0.2) > t(1.0, 0.3));
        assert!(t(1.0, 0.2) > t(1.1, 0.2));
    }

    #[test]
    fn standard_a_convention_halves_the_lifetime() {
        let a = radiative_lifetime(1.5, 1.0, 2.1, LifetimeConvention::AsPrinted).unwrap();
        let b = radiative_lifetime(1.5, 1.0, 2.1, LifetimeConvention::StandardA).unwrap();
        assert_relative_eq!(a / b, 2.0, max_relative = 1e-12);
    }

    #[test]
    fn lifetime_domain_errors() {
        assert!(matches!(
            radiative_lifetime(-1.0, 0.5, 2.1, LifetimeConvention::AsPrinted),
            Err(OpticsError::Domain { .. })
        ));
        assert!(matches!(
            radiative_lifetime(1.0, -0.5, 2.1, LifetimeConvention::AsPrinted),
            Err(OpticsError::Domain { .. })
        ));
        assert!(matches!(
            radiative_lifetime(1.0, 0.5, 0.9, LifetimeConvention::AsPrinted),
            Err(OpticsError::Domain { .. })
        ));
    }

    #[test]
    fn zpl_difference_and_warning() {
        let v = zpl(-100.00, -101.62);
        assert_relative_eq!(v.e_zpl_ev, 1.62, epsilon = 1e-12);
        assert!(v.warning.is_none());

        let v = zpl(-50.37, -51.00);
        assert_relative_eq!(v.e_zpl_ev, 0.63, epsilon = 1e-12);

        let v = zpl(-3.0, -3.0);
        assert_eq!(v.e_zpl_ev, 0.0);
        assert!(v.warning.is_some());
    }

    #[test]
    fn bound_exciton_sign_rule() {
        let s = bound_exciton_stability(1.61, 1.37);
        assert_relative_eq!(s.bes_ev, 0.24, epsilon = 1e-12);
        assert!(s.stable);
        assert!(!bound_exciton_stability(0.8, 0.8).stable);
        let s = bound_exciton_stability(0.5, 0.8);
        assert_relative_eq!(s.bes_ev, -0.3, epsilon = 1e-12);
        assert!(!s.stable);
    }

    #[test]
    fn record_shape_follows_transition_kind() {
        let bes = Some(bound_exciton_stability(0.63, 0.34));
        assert!(ZplRecord::new("N_i^+1".into(), TransitionKind::LD, 0.63, None, bes).is_ok());
        assert!(matches!(
            ZplRecord::new("N_i^+1".into(), TransitionKind::LD, 0.63, None, None),
            Err(OpticsError::InvalidRecord { .. })
        ));
        assert!(matches!(
            ZplRecord::new("V_B^-1".into(), TransitionKind::LL, 1.62, None, bes),
            Err(OpticsError::InvalidRecord { .. })
        ));
        assert!(matches!(
            ZplRecord::new("X".into(), TransitionKind::LL, -0.3, None, None),
            Err(OpticsError::InvalidRecord { .. })
        ));
    }

    #[test]
    fn record_from_manifest_entry_derives_stability() {
        let entry = ZplEntry {
            kind: TransitionKind::LD,
            e_zpl_ev: Some(0.63),
            e_excited_ev: None,
            e_ground_ev: None,
            lifetime_ns: Some(246.01),
            ctl_reference_ev: Some(0.34),
        };
        let rec = ZplRecord::from_manifest("N_i^+1", &entry).unwrap();
        let bes = rec.bes.unwrap();
        assert_relative_eq!(bes.bes_ev, 0.29, epsilon = 1e-12);
        assert!(bes.stable);
        assert_eq!(rec.lifetime_ns, Some(246.01));
    }
}
