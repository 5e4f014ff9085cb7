//! Hyperfine coupling between the electron spin density and one nucleus:
//! the isotropic Fermi-contact part read off the density at the nucleus
//! and the anisotropic dipole–dipole part integrated over the cell.
//!
//! ```text
//! A_ij = (μ₀/4π) (1/2S) γ_J γ_e ħ² [ (8π/3) σ(R_J) δ_ij + W_ij(R_J) ]
//! W_ij(R) = ∫ [ 3 d_i d_j / |d|⁵ − δ_ij / |d|³ ] σ(r) dr,   d = r − R
//! ```
//!
//! σ is the net spin density in Å⁻³ (integrating to 2S electrons); the
//! tensor comes out in MHz. The cell integral uses the minimum-image
//! displacement per grid point and excludes a small sphere around the
//! nucleus where the kernel diverges.

use nalgebra::{Matrix3, Vector3};

use super::{NucleusSpec, SpinError};
use crate::constants::{GAMMA_ELECTRON_RAD_S_T, HBAR_J_S, MU0_OVER_4PI, PLANCK_J_S};
use crate::io::VolumetricGrid;
use crate::model::wrap_half;

/// Grid points closer to the nucleus than this (Å) are excluded from the
/// dipolar quadrature; the delta-function physics they carry is already
/// accounted for by the contact term.
pub const R_CUT_EXCLUSION_A: f64 = 0.1;

/// Fermi-contact value (8π/3)·σ(R), in Å⁻³, with σ interpolated
/// trilinearly at the nucleus.
pub fn fermi_contact(sigma: &VolumetricGrid, position_frac: Vector3<f64>) -> f64 {
    (8.0 * std::f64::consts::PI / 3.0) * sigma.trilinear(position_frac)
}

/// Dipolar tensor W_ij(R) in Å⁻³ with the default exclusion radius.
pub fn dipole_dipole_tensor(sigma: &VolumetricGrid, position_frac: Vector3<f64>) -> Matrix3<f64> {
    dipole_dipole_tensor_with_cutoff(sigma, position_frac, R_CUT_EXCLUSION_A)
}

/// Dipolar tensor with an explicit exclusion radius, for convergence
/// studies of the singularity handling.
pub fn dipole_dipole_tensor_with_cutoff(
    sigma: &VolumetricGrid,
    position_frac: Vector3<f64>,
    r_cut_a: f64,
) -> Matrix3<f64> {
    let [nx, ny, nz] = sigma.dims();
    let lattice = sigma.lattice().clone();
    let r_cut_sq = r_cut_a * r_cut_a;
    let mut w = Matrix3::zeros();
    for iz in 0..nz {
        for iy in 0..ny {
            for ix in 0..nx {
                let value = sigma.value(ix, iy, iz);
                let df = Vector3::new(
                    wrap_half(ix as f64 / nx as f64 - position_frac.x),
                    wrap_half(iy as f64 / ny as f64 - position_frac.y),
                    wrap_half(iz as f64 / nz as f64 - position_frac.z),
                );
                let d = lattice.frac_to_cart(df);
                let r_sq = d.norm_squared();
                if r_sq < r_cut_sq {
                    continue;
                }
                let r = r_sq.sqrt();
                let r5 = r_sq * r_sq * r;
                for a in 0..3 {
                    for b in 0..3 {
                        let mut term = 3.0 * d[a] * d[b] / r5;
                        if a == b {
                            term -= 1.0 / (r_sq * r);
                        }
                        w[(a, b)] += term * value;
                    }
                }
            }
        }
    }
    w * sigma.voxel_volume()
}

/// Unit bridge from Å⁻³ density kernels to MHz:
/// (μ₀/4π)(1/2S) γ_J γ_e ħ² / h, with the Å⁻³ → m⁻³ conversion folded in.
pub fn hyperfine_prefactor_mhz(total_spin: f64, gamma_j_rad_s_t: f64) -> f64 {
    MU0_OVER_4PI * gamma_j_rad_s_t * GAMMA_ELECTRON_RAD_S_T * HBAR_J_S * HBAR_J_S * 1e30
        / (2.0 * total_spin * PLANCK_J_S * 1e6)
}

/// Hyperfine coupling tensor in MHz with its principal values (ascending)
/// and isotropic part.
#[derive(Debug, Clone, PartialEq)]
pub struct HyperfineTensor {
    pub a_mhz: Matrix3<f64>,
    pub principal_mhz: [f64; 3],
    pub a_iso_mhz: f64,
    /// Set when ∫σ deviates from the expected 2S electron count by more
    /// than 1%.
    pub norm_warning: Option<String>,
}

pub fn hyperfine_tensor(
    total_spin: f64,
    nucleus: &NucleusSpec,
    sigma: &VolumetricGrid,
) -> Result<HyperfineTensor, SpinError> {
    if total_spin <= 0.0 {
        return Err(SpinError::NoUnpairedSpin);
    }
    let net = sigma.integral();
    let expected = 2.0 * total_spin;
    let deviation = (net - expected).abs() / expected;
    let norm_warning = (deviation > 0.01).then(|| {
        format!(
            "spin density integrates to {net:.6} electrons, expected {expected} \
             (deviation {:.1}%)",
            deviation * 100.0
        )
    });

    let contact = fermi_contact(sigma, nucleus.position_frac);
    let dipolar = dipole_dipole_tensor(sigma, nucleus.position_frac);
    let prefactor = hyperfine_prefactor_mhz(total_spin, nucleus.gamma_rad_s_t);
    let a_mhz = (Matrix3::identity() * contact + dipolar) * prefactor;

    let mut principal_mhz: [f64; 3] = a_mhz.symmetric_eigen().eigenvalues.into();
    principal_mhz.sort_by(|x, y| x.partial_cmp(y).unwrap());

    Ok(HyperfineTensor {
        a_mhz,
        principal_mhz,
        a_iso_mhz: a_mhz.trace() / 3.0,
        norm_warning,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Crystal, Lattice, Site};
    use approx::assert_relative_eq;
    use rand::{RngExt, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cubic_crystal(l: f64) -> Crystal {
        Crystal::new(
            Lattice::cubic(l).unwrap(),
            vec![Site::new("X", [0.0, 0.0, 0.0])],
        )
        .unwrap()
    }

    /// Normalized Gaussian density (α/π)^{3/2} e^{−α d²} centered at
    /// `center` (fractional), sampled with minimum-image displacements.
    fn gaussian_grid(l: f64, n: usize, center: [f64; 3], alpha: f64) -> VolumetricGrid {
        let crystal = cubic_crystal(l);
        let lattice = crystal.lattice.clone();
        let norm = (alpha / std::f64::consts::PI).powf(1.5);
        VolumetricGrid::sample(crystal, [n, n, n], |f| {
            let df = Vector3::new(
                wrap_half(f.x - center[0]),
                wrap_half(f.y - center[1]),
                wrap_half(f.z - center[2]),
            );
            let d = lattice.frac_to_cart(df);
            norm * (-alpha * d.norm_squared()).exp()
        })
        .unwrap()
    }

    fn random_grid(l: f64, n: usize, seed: u64) -> VolumetricGrid {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let values: Vec<f64> = (0..n * n * n).map(|_| rng.random_range(-1.0..1.0)).collect();
        VolumetricGrid::new(cubic_crystal(l), [n, n, n], values).unwrap()
    }

    #[test]
    fn contact_of_zero_density_is_zero() {
        let grid = VolumetricGrid::new(cubic_crystal(5.0), [4, 4, 4], vec![0.0; 64]).unwrap();
        assert_eq!(fermi_contact(&grid, Vector3::new(0.3, 0.3, 0.3)), 0.0);
    }

    #[test]
    fn contact_of_centered_gaussian_matches_analytic_peak() {
        let alpha = 4.0;
        let grid = gaussian_grid(12.0, 96, [0.5, 0.5, 0.5], alpha);
        // Sanity: the sampled density holds one electron.
        assert_relative_eq!(grid.integral(), 1.0, max_relative = 1e-3);
        let got = fermi_contact(&grid, Vector3::new(0.5, 0.5, 0.5));
        let expect =
            8.0 * std::f64::consts::PI / 3.0 * (alpha / std::f64::consts::PI).powf(1.5);
        assert_relative_eq!(got, expect, max_relative = 1e-3);
    }

    #[test]
    fn contact_far_from_a_narrow_gaussian_vanishes() {
        let alpha = 25.0;
        let grid = gaussian_grid(12.0, 96, [0.5, 0.5, 0.5], alpha);
        let centered = fermi_contact(&grid, Vector3::new(0.5, 0.5, 0.5));
        // 3 Å away along x: 0.25 of the 12 Å cell.
        let displaced = fermi_contact(&grid, Vector3::new(0.75, 0.5, 0.5));
        assert!(displaced.abs() < 1e-6 * centered);
    }

    #[test]
    fn dipolar_tensor_of_spherical_density_cancels() {
        let grid = gaussian_grid(12.0, 96, [0.5, 0.5, 0.5], 4.0);
        let w = dipole_dipole_tensor(&grid, Vector3::new(0.5, 0.5, 0.5));
        assert!(w.abs().max() < 1e-6, "residual {:e}", w.abs().max());
    }

    #[test]
    fn dipolar_tensor_reaches_point_dipole_limit() {
        // Narrow blob displaced 2 Å along z from the nucleus: W_zz → 2/d³,
        // transverse components → −1/d³.
        let l = 12.0;
        let d: f64 = 2.0;
        let grid = gaussian_grid(l, 96, [0.5, 0.5, 0.5 + d / l], 8.0);
        let w = dipole_dipole_tensor(&grid, Vector3::new(0.5, 0.5, 0.5));
        let expect_zz = 2.0 / d.powi(3);
        assert_relative_eq!(w[(2, 2)], expect_zz, max_relative = 1e-2);
        assert_relative_eq!(w[(0, 0)], -expect_zz / 2.0, max_relative = 1e-2);
        assert_relative_eq!(w[(1, 1)], -expect_zz / 2.0, max_relative = 1e-2);
        assert!(w.trace().abs() < 1e-9 * w.abs().max());
        assert!((w - w.transpose()).abs().max() < 1e-12);
    }

    /// Same quadrature rule as the implementation, written out directly.
    fn direct_dipolar_oracle(
        sigma: &VolumetricGrid,
        position_frac: Vector3<f64>,
        r_cut_a: f64,
    ) -> Matrix3<f64> {
        let [nx, ny, nz] = sigma.dims();
        let lattice = sigma.lattice().clone();
        let mut w = Matrix3::zeros();
        for iz in 0..nz {
            for iy in 0..ny {
                for ix in 0..nx {
                    let value = sigma.value(ix, iy, iz);
                    let df = Vector3::new(
                        wrap_half(ix as f64 / nx as f64 - position_frac.x),
                        wrap_half(iy as f64 / ny as f64 - position_frac.y),
                        wrap_half(iz as f64 / nz as f64 - position_frac.z),
                    );
                    let d = lattice.frac_to_cart(df);
                    let r_sq = d.norm_squared();
                    if r_sq < r_cut_a * r_cut_a {
                        continue;
                    }
                    let r = r_sq.sqrt();
                    let r5 = r_sq * r_sq * r;
                    for a in 0..3 {
                        for b in 0..3 {
                            let mut term = 3.0 * d[a] * d[b] / r5;
                            if a == b {
                                term -= 1.0 / (r_sq * r);
                            }
                            w[(a, b)] += term * value;
                        }
                    }
                }
            }
        }
        w * sigma.voxel_volume()
    }

    #[test]
    fn dipolar_tensor_matches_direct_oracle_exactly() {
        let grid = random_grid(6.0, 8, 11);
        let pos = Vector3::new(0.31, 0.62, 0.15);
        let got = dipole_dipole_tensor(&grid, pos);
        let want = direct_dipolar_oracle(&grid, pos, R_CUT_EXCLUSION_A);
        assert_eq!(got, want);
    }

    #[test]
    fn dipolar_tensor_rotates_covariantly() {
        // Quarter turn about z: grid values move by
        // σ'[ix, iy, iz] = σ[iy, (n − ix) mod n, iz], densities rotate by
        // R = [[0, −1, 0], [1, 0, 0], [0, 0, 1]], and W' = R W Rᵀ.
        let n = 8;
        let grid = random_grid(6.0, n, 23);
        let mut rotated_values = vec![0.0; n * n * n];
        for iz in 0..n {
            for iy in 0..n {
                for ix in 0..n {
                    rotated_values[grid.index(ix, iy, iz)] =
                        grid.value(iy, (n - ix) % n, iz);
                }
            }
        }
        let rotated = VolumetricGrid::new(cubic_crystal(6.0), [n, n, n], rotated_values).unwrap();

        let r = Matrix3::new(0.0, -1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0);
        let pos = Vector3::new(0.3, 0.55, 0.5);
        let pos_rot = Vector3::new(
            crate::model::wrap_unit(-pos.y),
            crate::model::wrap_unit(pos.x),
            pos.z,
        );
        let w = dipole_dipole_tensor(&grid, pos);
        let w_rot = dipole_dipole_tensor(&rotated, pos_rot);
        let expect = r * w * r.transpose();
        assert!(
            (w_rot - expect).abs().max() < 1e-10 * w.abs().max().max(1.0),
            "covariance residual {:e}",
            (w_rot - expect).abs().max()
        );
    }

    #[test]
    fn zero_density_gives_zero_tensor() {
        let grid = VolumetricGrid::new(cubic_crystal(5.0), [8, 8, 8], vec![0.0; 512]).unwrap();
        let nucleus = NucleusSpec::from_isotope(Vector3::new(0.5, 0.5, 0.5), "14N").unwrap();
        let t = hyperfine_tensor(0.5, &nucleus, &grid).unwrap();
        assert_eq!(t.a_mhz, Matrix3::zeros());
        assert_eq!(t.a_iso_mhz, 0.0);
        // ∫σ = 0 instead of 1 is flagged.
        assert!(t.norm_warning.is_some());
    }

    #[test]
    fn gaussian_at_nucleus_is_purely_isotropic() {
        let alpha = 4.0;
        let grid = gaussian_grid(12.0, 96, [0.5, 0.5, 0.5], alpha);
        let nucleus = NucleusSpec::from_isotope(Vector3::new(0.5, 0.5, 0.5), "14N").unwrap();
        let t = hyperfine_tensor(0.5, &nucleus, &grid).unwrap();

        let expect = hyperfine_prefactor_mhz(0.5, nucleus.gamma_rad_s_t)
            * (8.0 * std::f64::consts::PI / 3.0)
            * (alpha / std::f64::consts::PI).powf(1.5);
        assert_relative_eq!(t.a_iso_mhz, expect, max_relative = 2e-3);
        for v in t.principal_mhz {
            assert_relative_eq!(v, t.a_iso_mhz, max_relative = 1e-4);
        }
        assert_relative_eq!(t.a_iso_mhz, t.a_mhz.trace() / 3.0, epsilon = 1e-12);
        // One electron of spin density → no norm warning.
        assert!(t.norm_warning.is_none(), "{:?}", t.norm_warning);
    }

    #[test]
    fn prefactor_reproduces_the_hydrogen_ground_state_splitting() {
        // |ψ₁s(0)|² = 1/(π a₀³) with a₀ = 0.529177 Å and the proton
        // γ/2π = 42.5775 MHz/T give the famous 21 cm transition at
        // 1420.4 MHz.
        let a0: f64 = 0.529177;
        let sigma_at_nucleus = 1.0 / (std::f64::consts::PI * a0.powi(3));
        let gamma_p = 42.5775e6 * 2.0 * std::f64::consts::PI;
        let a_iso = hyperfine_prefactor_mhz(0.5, gamma_p)
            * (8.0 * std::f64::consts::PI / 3.0)
            * sigma_at_nucleus;
        assert_relative_eq!(a_iso, 1420.4, max_relative = 5e-3);
    }

    #[test]
    fn displaced_blob_gives_axial_tensor() {
        let l = 12.0;
        let d: f64 = 2.0;
        let grid = gaussian_grid(l, 96, [0.5, 0.5, 0.5 + d / l], 8.0);
        let nucleus = NucleusSpec::from_isotope(Vector3::new(0.5, 0.5, 0.5), "14N").unwrap();
        let t = hyperfine_tensor(0.5, &nucleus, &grid).unwrap();
        // Principal values in ratio (−1, −1, 2): contact is negligible
        // 2 Å from the blob.
        let [p0, p1, p2] = t.principal_mhz;
        assert_relative_eq!(p0 / p2, -0.5, max_relative = 1e-2);
        assert_relative_eq!(p1 / p2, -0.5, max_relative = 1e-2);
        assert!(p2 > 0.0);
        assert!(t.a_iso_mhz.abs() < 1e-4 * p2);
    }

    #[test]
    fn spinless_density_is_rejected() {
        let grid = VolumetricGrid::new(cubic_crystal(5.0), [4, 4, 4], vec![0.1; 64]).unwrap();
        let nucleus = NucleusSpec::from_isotope(Vector3::zeros(), "11B").unwrap();
        assert!(matches!(
            hyperfine_tensor(0.0, &nucleus, &grid),
            Err(SpinError::NoUnpairedSpin)
        ));
    }

    #[test]
    fn norm_mismatch_warns() {
        // One electron of density against S = 1 (two expected).
        let grid = gaussian_grid(12.0, 48, [0.5, 0.5, 0.5], 4.0);
        let nucleus = NucleusSpec::from_isotope(Vector3::new(0.5, 0.5, 0.5), "14N").unwrap();
        let t = hyperfine_tensor(1.0, &nucleus, &grid).unwrap();
        let warning = t.norm_warning.expect("50% deviation must warn");
        assert!(warning.contains("expected 2"), "{warning}");
    }
}
