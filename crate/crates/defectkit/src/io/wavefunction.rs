//! Binary plane-wave wavefunction container ("PWC1").
//!
//! Little-endian layout:
//!
//! | field | type |
//! |---|---|
//! | magic | 4 bytes, `PWC1` |
//! | version | u32, currently 1 |
//! | n_spin, n_k, n_bands | u32 each |
//! | lattice rows (Å) | 9 × f64 |
//! | plane-wave cutoff (eV) | f64 |
//!
//! followed, for each spin (outer) and k-point (inner), by
//!
//! | field | type |
//! |---|---|
//! | k-vector (fractional) | 3 × f64 |
//! | weight | f64 |
//! | n_pw | u32 |
//! | G-vectors | n_pw × 3 × i32 |
//! | per band: eigenvalue (eV), occupation, coefficients | f64, f64, n_pw × 2 × f64 (re, im) |
//!
//! Every band is normalized (Σ|c|² = 1 within [`NORM_TOL`]), k-point weights
//! sum to 1 per spin channel within [`WEIGHT_TOL`], and every plane wave
//! satisfies the kinetic-energy cutoff.

use byteorder::{ByteOrder, LittleEndian, WriteBytesExt};
use nalgebra::Vector3;
use num_complex::Complex64;

use super::IoError;
use crate::constants::HBAR2_OVER_ME_EV_A2;
use crate::model::Lattice;

const MAGIC: &[u8; 4] = b"PWC1";
const VERSION: u32 = 1;

/// Tolerance on |Σ|c|² − 1| for each band.
pub const NORM_TOL: f64 = 1e-8;
/// Tolerance on |Σ w_k − 1| per spin channel.
pub const WEIGHT_TOL: f64 = 1e-10;
/// Relative slack when checking plane-wave kinetic energies against the
/// cutoff, so boundary G-vectors survive round-tripping.
const CUTOFF_SLACK: f64 = 1e-9;

/// One band at a fixed (spin, k): eigenvalue, occupation, and plane-wave
/// coefficients aligned with the block's G-vector list.
#[derive(Debug, Clone, PartialEq)]
pub struct Band {
    pub eigenvalue_ev: f64,
    pub occupation: f64,
    pub coefficients: Vec<Complex64>,
}

/// All bands at one (spin, k-point) pair, with the shared G-vector basis.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinKBlock {
    pub k_frac: Vector3<f64>,
    pub weight: f64,
    pub gvectors: Vec<[i32; 3]>,
    pub bands: Vec<Band>,
}

impl SpinKBlock {
    /// Cartesian k+G in Å⁻¹ for the plane wave at `index`.
    pub fn k_plus_g_cart(&self, lattice: &Lattice, index: usize) -> Vector3<f64> {
        let g = self.gvectors[index];
        let m = self.k_frac + Vector3::new(g[0] as f64, g[1] as f64, g[2] as f64);
        lattice.reciprocal().matrix().transpose() * m
    }
}

/// A validated set of plane-wave wavefunctions, blocks stored spin-major
/// (`block(spin, k)` = `blocks[spin * n_kpoints + k]`).
#[derive(Debug, Clone, PartialEq)]
pub struct WavefunctionSet {
    lattice: Lattice,
    encut_ev: f64,
    n_spins: usize,
    n_kpoints: usize,
    n_bands: usize,
    blocks: Vec<SpinKBlock>,
}

impl WavefunctionSet {
    pub fn new(lattice: Lattice, encut_ev: f64, blocks_by_spin: Vec<Vec<SpinKBlock>>) -> Result<Self, IoError> {
        let n_spins = blocks_by_spin.len();
        let n_kpoints = blocks_by_spin.first().map_or(0, Vec::len);
        if blocks_by_spin.iter().any(|s| s.len() != n_kpoints) {
            return Err(IoError::Format(
                "all spin channels must hold the same number of k-points".into(),
            ));
        }
        let blocks: Vec<SpinKBlock> = blocks_by_spin.into_iter().flatten().collect();
        let n_bands = blocks.first().map_or(0, |b| b.bands.len());
        let set = WavefunctionSet {
            lattice,
            encut_ev,
            n_spins,
            n_kpoints,
            n_bands,
            blocks,
        };
        set.validate()?;
        Ok(set)
    }

    fn validate(&self) -> Result<(), IoError> {
        if !(self.n_spins == 1 || self.n_spins == 2) {
            return Err(IoError::Format(format!(
                "spin channel count must be 1 or 2, got {}",
                self.n_spins
            )));
        }
        if self.n_kpoints == 0 || self.n_bands == 0 {
            return Err(IoError::Format(
                "wavefunction set needs at least one k-point and one band".into(),
            ));
        }
        if !(self.encut_ev > 0.0) {
            return Err(IoError::Format(format!(
                "plane-wave cutoff must be positive, got {} eV",
                self.encut_ev
            )));
        }
        for spin in 0..self.n_spins {
            let mut weight_sum = 0.0;
            for kpoint in 0..self.n_kpoints {
                let block = self.block(spin, kpoint);
                if block.gvectors.is_empty() {
                    return Err(IoError::Format(format!(
                        "empty plane-wave basis (spin {spin}, k-point {kpoint})"
                    )));
                }
                if !(block.weight >= 0.0) {
                    return Err(IoError::Format(format!(
                        "negative k-point weight {} (spin {spin}, k-point {kpoint})",
                        block.weight
                    )));
                }
                weight_sum += block.weight;
                if block.bands.len() != self.n_bands {
                    return Err(IoError::CountMismatch {
                        what: "bands per k-point",
                        expected: self.n_bands,
                        found: block.bands.len(),
                    });
                }
                for (index, _) in block.gvectors.iter().enumerate() {
                    let kinetic = 0.5 * HBAR2_OVER_ME_EV_A2
                        * block.k_plus_g_cart(&self.lattice, index).norm_squared();
                    if kinetic > self.encut_ev * (1.0 + CUTOFF_SLACK) {
                        return Err(IoError::CutoffExceeded {
                            spin,
                            kpoint,
                            index,
                            energy_ev: kinetic,
                            encut_ev: self.encut_ev,
                        });
                    }
                }
                for (band_idx, band) in block.bands.iter().enumerate() {
                    if band.coefficients.len() != block.gvectors.len() {
                        return Err(IoError::CountMismatch {
                            what: "plane-wave coefficients",
                            expected: block.gvectors.len(),
                            found: band.coefficients.len(),
                        });
                    }
                    let norm: f64 = band.coefficients.iter().map(|c| c.norm_sqr()).sum();
                    if (norm - 1.0).abs() > NORM_TOL {
                        return Err(IoError::Normalization {
                            spin,
                            kpoint,
                            band: band_idx,
                            norm,
                        });
                    }
                }
            }
            if (weight_sum - 1.0).abs() > WEIGHT_TOL {
                return Err(IoError::WeightError {
                    spin,
                    sum: weight_sum,
                });
            }
        }
        Ok(())
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn encut_ev(&self) -> f64 {
        self.encut_ev
    }

    pub fn n_spins(&self) -> usize {
        self.n_spins
    }

    pub fn n_kpoints(&self) -> usize {
        self.n_kpoints
    }

    pub fn n_bands(&self) -> usize {
        self.n_bands
    }

    pub fn block(&self, spin: usize, kpoint: usize) -> &SpinKBlock {
        &self.blocks[spin * self.n_kpoints + kpoint]
    }

    pub fn blocks(&self) -> &[SpinKBlock] {
        &self.blocks
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn need(&self, n: u64) -> Result<(), IoError> {
        if (self.buf.len() - self.pos) as u64 >= n {
            Ok(())
        } else {
            Err(IoError::Truncated {
                offset: self.pos as u64,
                needed: n,
            })
        }
    }

    fn bytes(&mut self, n: usize) -> Result<&'a [u8], IoError> {
        self.need(n as u64)?;
        let out = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    fn u32(&mut self) -> Result<u32, IoError> {
        Ok(LittleEndian::read_u32(self.bytes(4)?))
    }

    fn i32(&mut self) -> Result<i32, IoError> {
        Ok(LittleEndian::read_i32(self.bytes(4)?))
    }

    fn f64(&mut self) -> Result<f64, IoError> {
        Ok(LittleEndian::read_f64(self.bytes(8)?))
    }
}

/// Parse a PWC1 byte stream into a validated [`WavefunctionSet`].
pub fn read_wavefunctions(bytes: &[u8]) -> Result<WavefunctionSet, IoError> {
    let mut r = Reader { buf: bytes, pos: 0 };

    let magic = r.bytes(4)?;
    if magic != MAGIC {
        return Err(IoError::Format(format!(
            "bad magic {magic:?}, expected {MAGIC:?}"
        )));
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(IoError::Format(format!(
            "unsupported version {version}, expected {VERSION}"
        )));
    }
    let n_spins = r.u32()? as usize;
    let n_kpoints = r.u32()? as usize;
    let n_bands = r.u32()? as usize;
    let mut rows = [[0.0; 3]; 3];
    for row in &mut rows {
        for x in row.iter_mut() {
            *x = r.f64()?;
        }
    }
    let lattice = Lattice::from_rows(rows[0], rows[1], rows[2])?;
    let encut_ev = r.f64()?;

    if n_spins == 0 || n_spins > 2 {
        return Err(IoError::Format(format!(
            "spin channel count must be 1 or 2, got {n_spins}"
        )));
    }

    let mut blocks_by_spin = Vec::with_capacity(n_spins);
    for _ in 0..n_spins {
        let mut spin_blocks = Vec::with_capacity(n_kpoints);
        for _ in 0..n_kpoints {
            let k_frac = Vector3::new(r.f64()?, r.f64()?, r.f64()?);
            let weight = r.f64()?;
            let n_pw = r.u32()? as usize;
            if n_pw == 0 {
                return Err(IoError::Format("plane-wave count must be positive".into()));
            }
            // Budget the whole block before allocating so absurd counts in a
            // short file fail as Truncated instead of exhausting memory.
            let block_bytes = 12 * n_pw as u64 + n_bands as u64 * (16 + 16 * n_pw as u64);
            r.need(block_bytes)?;
            let mut gvectors = Vec::with_capacity(n_pw);
            for _ in 0..n_pw {
                gvectors.push([r.i32()?, r.i32()?, r.i32()?]);
            }
            let mut bands = Vec::with_capacity(n_bands);
            for _ in 0..n_bands {
                let eigenvalue_ev = r.f64()?;
                let occupation = r.f64()?;
                let mut coefficients = Vec::with_capacity(n_pw);
                for _ in 0..n_pw {
                    coefficients.push(Complex64::new(r.f64()?, r.f64()?));
                }
                bands.push(Band {
                    eigenvalue_ev,
                    occupation,
                    coefficients,
                });
            }
            spin_blocks.push(SpinKBlock {
                k_frac,
                weight,
                gvectors,
                bands,
            });
        }
        blocks_by_spin.push(spin_blocks);
    }
    if r.pos != bytes.len() {
        return Err(IoError::Format(format!(
            "{} trailing bytes after wavefunction payload",
            bytes.len() - r.pos
        )));
    }

    if n_kpoints == 0 || n_bands == 0 {
        return Err(IoError::Format(
            "wavefunction set needs at least one k-point and one band".into(),
        ));
    }
    WavefunctionSet::new(lattice, encut_ev, blocks_by_spin)
}

/// Serialize a set back to PWC1 bytes; `read_wavefunctions` returns an equal
/// set, and write∘read is the identity on valid byte streams.
pub fn write_wavefunctions(set: &WavefunctionSet) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.write_u32::<LittleEndian>(VERSION).unwrap();
    out.write_u32::<LittleEndian>(set.n_spins as u32).unwrap();
    out.write_u32::<LittleEndian>(set.n_kpoints as u32).unwrap();
    out.write_u32::<LittleEndian>(set.n_bands as u32).unwrap();
    let rows = set.lattice.matrix();
    for i in 0..3 {
        for j in 0..3 {
            out.write_f64::<LittleEndian>(rows[(i, j)]).unwrap();
        }
    }
    out.write_f64::<LittleEndian>(set.encut_ev).unwrap();
    for block in &set.blocks {
        for i in 0..3 {
            out.write_f64::<LittleEndian>(block.k_frac[i]).unwrap();
        }
        out.write_f64::<LittleEndian>(block.weight).unwrap();
        out.write_u32::<LittleEndian>(block.gvectors.len() as u32).unwrap();
        for g in &block.gvectors {
            for &c in g {
                out.write_i32::<LittleEndian>(c).unwrap();
            }
        }
        for band in &block.bands {
            out.write_f64::<LittleEndian>(band.eigenvalue_ev).unwrap();
            out.write_f64::<LittleEndian>(band.occupation).unwrap();
            for c in &band.coefficients {
                out.write_f64::<LittleEndian>(c.re).unwrap();
                out.write_f64::<LittleEndian>(c.im).unwrap();
            }
        }
    }
    out
}
