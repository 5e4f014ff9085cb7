//! Volumetric scalar fields (spin densities, orbital amplitudes) on a
//! periodic grid, stored as text.
//!
//! Layout: a full structure header (see [`super::parse_structure`]), one
//! blank separator line, a line with the three grid dimensions, then the
//! values five per line. Values are samples at fractional coordinates
//! (i/n1, j/n2, k/n3) with the **first index fastest**:
//! `index = ix + n1*(iy + n2*iz)`. Densities are in Å⁻³; nothing is
//! premultiplied by the cell volume.

use nalgebra::Vector3;

use super::structure::{parse_structure_block, write_structure_block, LineCursor};
use super::IoError;
use crate::model::{wrap_unit, Crystal, Lattice};

/// A scalar field sampled on a regular periodic grid.
#[derive(Debug, Clone, PartialEq)]
pub struct VolumetricGrid {
    pub crystal: Crystal,
    dims: [usize; 3],
    values: Vec<f64>,
}

impl VolumetricGrid {
    pub fn new(crystal: Crystal, dims: [usize; 3], values: Vec<f64>) -> Result<Self, IoError> {
        if dims.iter().any(|&n| n == 0) {
            return Err(IoError::Format(format!(
                "grid dimensions must be positive, got {dims:?}"
            )));
        }
        let expected = dims[0] * dims[1] * dims[2];
        if values.len() != expected {
            return Err(IoError::CountMismatch {
                what: "grid values",
                expected,
                found: values.len(),
            });
        }
        Ok(VolumetricGrid {
            crystal,
            dims,
            values,
        })
    }

    /// Build a grid by sampling `f` (taking fractional coordinates) on the
    /// grid points.
    pub fn sample(
        crystal: Crystal,
        dims: [usize; 3],
        mut f: impl FnMut(Vector3<f64>) -> f64,
    ) -> Result<Self, IoError> {
        let mut values = Vec::with_capacity(dims[0] * dims[1] * dims[2]);
        for iz in 0..dims[2] {
            for iy in 0..dims[1] {
                for ix in 0..dims[0] {
                    values.push(f(Vector3::new(
                        ix as f64 / dims[0] as f64,
                        iy as f64 / dims[1] as f64,
                        iz as f64 / dims[2] as f64,
                    )));
                }
            }
        }
        Self::new(crystal, dims, values)
    }

    pub fn lattice(&self) -> &Lattice {
        &self.crystal.lattice
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn index(&self, ix: usize, iy: usize, iz: usize) -> usize {
        ix + self.dims[0] * (iy + self.dims[1] * iz)
    }

    #[inline]
    pub fn value(&self, ix: usize, iy: usize, iz: usize) -> f64 {
        self.values[self.index(ix, iy, iz)]
    }

    /// Volume element of one grid voxel, Å³.
    pub fn voxel_volume(&self) -> f64 {
        self.lattice().volume() / (self.dims[0] * self.dims[1] * self.dims[2]) as f64
    }

    /// ∫ f dV over the cell by the periodic trapezoid rule (Σ values · ΔV).
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.voxel_volume()
    }

    /// Periodic trilinear interpolation at a fractional coordinate.
    pub fn trilinear(&self, frac: Vector3<f64>) -> f64 {
        let mut idx0 = [0usize; 3];
        let mut idx1 = [0usize; 3];
        let mut t = [0.0f64; 3];
        for d in 0..3 {
            let n = self.dims[d];
            let x = wrap_unit(frac[d]) * n as f64;
            let i0 = (x.floor() as usize).min(n - 1);
            idx0[d] = i0;
            idx1[d] = (i0 + 1) % n;
            t[d] = x - i0 as f64;
        }
        let mut acc = 0.0;
        for corner in 0..8usize {
            let mut w = 1.0;
            let mut ijk = [0usize; 3];
            for d in 0..3 {
                if corner >> d & 1 == 1 {
                    w *= t[d];
                    ijk[d] = idx1[d];
                } else {
                    w *= 1.0 - t[d];
                    ijk[d] = idx0[d];
                }
            }
            acc += w * self.value(ijk[0], ijk[1], ijk[2]);
        }
        acc
    }
}

/// Parse a volumetric grid file. See the module docs for the layout.
pub fn parse_volumetric(text: &str) -> Result<VolumetricGrid, IoError> {
    let mut cursor = LineCursor::new(text);
    let crystal = parse_structure_block(&mut cursor)?;

    let (blank_line, blank) = cursor.take("blank separator line")?;
    if !blank.trim().is_empty() {
        return Err(IoError::Parse {
            line: blank_line,
            column: 1,
            message: format!("expected blank separator before grid dimensions, found {:?}", blank.trim()),
        });
    }

    let (dims_line, dims_text) = cursor.take("grid dimensions")?;
    let mut dims_vec = Vec::new();
    let mut cols = Vec::new();
    for (col, tok) in dims_text.split_whitespace().map(|tok| {
        let col = tok.as_ptr() as usize - dims_text.as_ptr() as usize + 1;
        (col, tok)
    }) {
        let n: usize = tok.parse().map_err(|_| IoError::Parse {
            line: dims_line,
            column: col,
            message: format!("expected a grid dimension, found {tok:?}"),
        })?;
        dims_vec.push(n);
        cols.push(col);
    }
    if dims_vec.len() != 3 {
        return Err(IoError::Parse {
            line: dims_line,
            column: 1,
            message: format!("expected 3 grid dimensions, found {}", dims_vec.len()),
        });
    }
    let dims = [dims_vec[0], dims_vec[1], dims_vec[2]];
    if dims.iter().any(|&n| n == 0) {
        return Err(IoError::Parse {
            line: dims_line,
            column: cols[dims_vec.iter().position(|&n| n == 0).unwrap()],
            message: "grid dimensions must be positive".into(),
        });
    }

    let expected = dims[0] * dims[1] * dims[2];
    let mut values = Vec::with_capacity(expected);
    while values.len() < expected {
        let (line_no, line) = match cursor.take("grid values") {
            Ok(x) => x,
            Err(IoError::Parse { .. }) => {
                return Err(IoError::CountMismatch {
                    what: "grid values",
                    expected,
                    found: values.len(),
                })
            }
            Err(e) => return Err(e),
        };
        for tok in line.split_whitespace() {
            let col = tok.as_ptr() as usize - line.as_ptr() as usize + 1;
            if values.len() == expected {
                return Err(IoError::Parse {
                    line: line_no,
                    column: col,
                    message: "trailing data after grid values".into(),
                });
            }
            values.push(tok.parse::<f64>().map_err(|_| IoError::Parse {
                line: line_no,
                column: col,
                message: format!("expected a grid value, found {tok:?}"),
            })?);
        }
    }
    if !cursor.at_end() {
        let (line_no, _) = cursor.take("end of file")?;
        return Err(IoError::Parse {
            line: line_no,
            column: 1,
            message: "trailing data after grid values".into(),
        });
    }

    VolumetricGrid::new(crystal, dims, values)
}

/// Write a volumetric grid file that `parse_volumetric` reproduces bit for
/// bit.
pub fn write_volumetric(grid: &VolumetricGrid, comment: &str) -> String {
    use std::fmt::Write;

    let mut out = String::new();
    write_structure_block(&grid.crystal, comment, &mut out);
    out.push('\n');
    writeln!(out, "{} {} {}", grid.dims[0], grid.dims[1], grid.dims[2]).unwrap();
    for chunk in grid.values.chunks(5) {
        let row = chunk
            .iter()
            .map(|v| format!("{v:.16e}"))
            .collect::<Vec<_>>()
            .join(" ");
        writeln!(out, "{row}").unwrap();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Site;
    use approx::assert_relative_eq;

    fn unit_crystal() -> Crystal {
        Crystal::new(
            Lattice::cubic(2.0).unwrap(),
            vec![Site::new("X", [0.0, 0.0, 0.0])],
        )
        .unwrap()
    }

    #[test]
    fn constant_grid_integral_is_volume_scaled() {
        let grid = VolumetricGrid::sample(unit_crystal(), [4, 4, 4], |_| 3.0).unwrap();
        assert_relative_eq!(grid.integral(), 3.0 * 8.0, max_relative = 1e-12);
    }

    #[test]
    fn index_order_is_first_axis_fastest() {
        let grid = VolumetricGrid::sample(unit_crystal(), [3, 2, 2], |f| {
            f[0] * 100.0 + f[1] * 10.0 + f[2]
        })
        .unwrap();
        assert_eq!(grid.index(1, 0, 0), 1);
        assert_eq!(grid.index(0, 1, 0), 3);
        assert_eq!(grid.index(0, 0, 1), 6);
        assert_relative_eq!(grid.value(2, 1, 1), 200.0 / 3.0 + 5.0 + 0.5, epsilon = 1e-12);
    }

    #[test]
    fn trilinear_reproduces_grid_points_and_midpoints() {
        let grid = VolumetricGrid::sample(unit_crystal(), [4, 4, 4], |f| {
            (2.0 * std::f64::consts::PI * f[0]).cos()
        })
        .unwrap();
        // On a grid point interpolation is exact.
        assert_relative_eq!(
            grid.trilinear(Vector3::new(0.25, 0.5, 0.5)),
            0.0,
            epsilon = 1e-12
        );
        // Midpoint between two grid points averages them.
        let expect = 0.5 * (1.0 + (std::f64::consts::PI / 2.0).cos());
        assert_relative_eq!(grid.trilinear(Vector3::new(0.125, 0.0, 0.0)), expect, epsilon = 1e-12);
    }

    #[test]
    fn trilinear_wraps_periodically() {
        let grid = VolumetricGrid::sample(unit_crystal(), [4, 4, 4], |f| f[0]).unwrap();
        assert_relative_eq!(
            grid.trilinear(Vector3::new(-0.25, 0.2, 0.9)),
            grid.trilinear(Vector3::new(0.75, 0.2, 0.9)),
            epsilon = 1e-12
        );
    }

    #[test]
    fn round_trip_is_bitwise() {
        let grid = VolumetricGrid::sample(unit_crystal(), [3, 4, 5], |f| {
            (f[0] - 0.3) * (f[1] + 1.7) * (f[2] - 0.9) * 1e-3
        })
        .unwrap();
        let text = write_volumetric(&grid, "field");
        let back = parse_volumetric(&text).unwrap();
        assert_eq!(back.dims(), grid.dims());
        assert_eq!(back.values().len(), grid.values().len());
        for (a, b) in grid.values().iter().zip(back.values()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn value_count_mismatch_detected() {
        let grid = VolumetricGrid::sample(unit_crystal(), [2, 2, 2], |_| 1.0).unwrap();
        let text = write_volumetric(&grid, "truncated");
        let short = text.trim_end().rsplit_once(' ').unwrap().0;
        match parse_volumetric(short) {
            Err(IoError::CountMismatch {
                what: "grid values",
                expected: 8,
                found,
            }) => assert!(found < 8),
            other => panic!("expected grid value count mismatch, got {other:?}"),
        }
    }

    #[test]
    fn trailing_values_detected() {
        let grid = VolumetricGrid::sample(unit_crystal(), [2, 2, 2], |_| 1.0).unwrap();
        let mut text = write_volumetric(&grid, "excess");
        text.push_str("9.9\n");
        assert!(matches!(parse_volumetric(&text), Err(IoError::Parse { .. })));
    }

    #[test]
    fn missing_blank_separator_detected() {
        let grid = VolumetricGrid::sample(unit_crystal(), [2, 2, 2], |_| 1.0).unwrap();
        let text = write_volumetric(&grid, "no blank").replacen("\n\n", "\n", 1);
        assert!(matches!(parse_volumetric(&text), Err(IoError::Parse { .. })));
    }
}
