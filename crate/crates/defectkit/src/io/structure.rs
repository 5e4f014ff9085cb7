//! Plain-text crystal structure files.
//!
//! Layout (one item per line unless noted):
//! 1. comment;
//! 2. scale factor — positive values multiply the lattice rows, a negative
//!    value −V rescales the cell isotropically to volume V;
//! 3.–5. the three lattice vectors as rows;
//! 6. species symbols (repeated symbols allowed, one block per token);
//! 7. per-symbol site counts;
//! 8. coordinate mode: `Direct` (fractional) or `Cartesian` (Å, also scaled);
//! 9.… one coordinate row per site, three numbers each (trailing text on a
//!    coordinate row is ignored).

use nalgebra::{Matrix3, Vector3};

use super::IoError;
use crate::model::{Crystal, Lattice, Site};

/// Iterate whitespace-separated tokens with their 1-based starting column.
fn tokens(line: &str) -> impl Iterator<Item = (usize, &str)> {
    line.split_whitespace().map(move |tok| {
        // offset of this token slice within the line
        let col = tok.as_ptr() as usize - line.as_ptr() as usize + 1;
        (col, tok)
    })
}

fn parse_f64(tok: &str, line: usize, column: usize) -> Result<f64, IoError> {
    tok.parse::<f64>().map_err(|_| IoError::Parse {
        line,
        column,
        message: format!("expected a number, found {tok:?}"),
    })
}

fn parse_usize(tok: &str, line: usize, column: usize) -> Result<usize, IoError> {
    tok.parse::<usize>().map_err(|_| IoError::Parse {
        line,
        column,
        message: format!("expected a non-negative integer, found {tok:?}"),
    })
}

/// Parse exactly `n` numbers from a line, rejecting extras.
fn parse_row(line: &str, line_no: usize, n: usize) -> Result<Vec<f64>, IoError> {
    let mut out = Vec::with_capacity(n);
    for (col, tok) in tokens(line) {
        if out.len() == n {
            return Err(IoError::Parse {
                line: line_no,
                column: col,
                message: format!("expected {n} numbers on this line, found extra token {tok:?}"),
            });
        }
        out.push(parse_f64(tok, line_no, col)?);
    }
    if out.len() < n {
        return Err(IoError::Parse {
            line: line_no,
            column: line.len() + 1,
            message: format!("expected {n} numbers on this line, found {}", out.len()),
        });
    }
    Ok(out)
}

/// Cursor over the lines of a structure block, shared with the volumetric
/// parser so headers report positions in the enclosing file.
pub(super) struct LineCursor<'a> {
    lines: Vec<&'a str>,
    pub next: usize,
}

impl<'a> LineCursor<'a> {
    pub fn new(text: &'a str) -> Self {
        LineCursor {
            lines: text.lines().collect(),
            next: 0,
        }
    }

    pub fn take(&mut self, what: &str) -> Result<(usize, &'a str), IoError> {
        let idx = self.next;
        match self.lines.get(idx) {
            Some(line) => {
                self.next += 1;
                Ok((idx + 1, line))
            }
            None => Err(IoError::Parse {
                line: idx + 1,
                column: 1,
                message: format!("unexpected end of file, expected {what}"),
            }),
        }
    }

    pub fn at_end(&self) -> bool {
        // Trailing blank lines are tolerated.
        self.lines[self.next..].iter().all(|l| l.trim().is_empty())
    }
}

pub(super) fn parse_structure_block(cursor: &mut LineCursor) -> Result<Crystal, IoError> {
    let _comment = cursor.take("comment line")?;

    let (scale_line, scale_text) = cursor.take("scale factor")?;
    let (scale_col, scale_tok) = tokens(scale_text).next().ok_or(IoError::Parse {
        line: scale_line,
        column: 1,
        message: "expected a scale factor".into(),
    })?;
    let scale = parse_f64(scale_tok, scale_line, scale_col)?;
    if scale == 0.0 {
        return Err(IoError::Parse {
            line: scale_line,
            column: scale_col,
            message: "scale factor must be nonzero".into(),
        });
    }

    let mut rows = [[0.0; 3]; 3];
    for row in &mut rows {
        let (line_no, line) = cursor.take("lattice vector row")?;
        let vals = parse_row(line, line_no, 3)?;
        row.copy_from_slice(&vals);
    }

    let raw = Matrix3::from_fn(|r, c| rows[r][c]);
    let factor = if scale > 0.0 {
        scale
    } else {
        let raw_vol = raw.determinant().abs();
        if raw_vol <= 0.0 {
            return Err(IoError::Parse {
                line: scale_line,
                column: scale_col,
                message: "volume-targeting scale requires a non-singular lattice".into(),
            });
        }
        (-scale / raw_vol).cbrt()
    };
    let lattice = Lattice::from_matrix(raw * factor)?;

    let (species_line, species_text) = cursor.take("species symbols")?;
    let mut species: Vec<String> = Vec::new();
    for (col, tok) in tokens(species_text) {
        if tok.parse::<f64>().is_ok() {
            return Err(IoError::Parse {
                line: species_line,
                column: col,
                message: format!(
                    "expected species symbols, found number {tok:?} (files without a symbol line are not supported)"
                ),
            });
        }
        species.push(tok.to_string());
    }
    if species.is_empty() {
        return Err(IoError::Parse {
            line: species_line,
            column: 1,
            message: "species line is empty".into(),
        });
    }

    let (counts_line, counts_text) = cursor.take("species counts")?;
    let mut counts: Vec<usize> = Vec::new();
    for (col, tok) in tokens(counts_text) {
        counts.push(parse_usize(tok, counts_line, col)?);
    }
    if counts.len() != species.len() {
        return Err(IoError::CountMismatch {
            what: "species counts",
            expected: species.len(),
            found: counts.len(),
        });
    }

    let (mode_line, mode_text) = cursor.take("coordinate mode")?;
    let mode = mode_text.trim();
    let direct = match mode.chars().next().map(|c| c.to_ascii_lowercase()) {
        Some('d') => true,
        Some('c') | Some('k') => false,
        _ => {
            return Err(IoError::Parse {
                line: mode_line,
                column: 1,
                message: format!(
                    "expected coordinate mode Direct or Cartesian, found {mode:?}"
                ),
            })
        }
    };

    let total: usize = counts.iter().sum();
    let mut sites = Vec::with_capacity(total);
    for (sym, &count) in species.iter().zip(&counts) {
        for _ in 0..count {
            let (line_no, line) = match cursor.take("coordinate row") {
                Ok(x) => x,
                Err(IoError::Parse { .. }) => {
                    return Err(IoError::CountMismatch {
                        what: "coordinate rows",
                        expected: total,
                        found: sites.len(),
                    })
                }
                Err(e) => return Err(e),
            };
            // Exactly three leading numbers; trailing annotations ignored.
            let mut vals = [0.0; 3];
            let mut got = 0;
            for (col, tok) in tokens(line) {
                if got == 3 {
                    break;
                }
                vals[got] = parse_f64(tok, line_no, col)?;
                got += 1;
            }
            if got < 3 {
                return Err(IoError::Parse {
                    line: line_no,
                    column: line.len() + 1,
                    message: format!("coordinate row has {got} numbers, expected 3"),
                });
            }
            let frac = if direct {
                Vector3::from(vals)
            } else {
                lattice.cart_to_frac(Vector3::from(vals) * factor)
            };
            sites.push(Site {
                species: sym.clone(),
                frac,
            });
        }
    }

    Ok(Crystal::new(lattice, sites)?)
}

/// Parse a structure file. See the module docs for the layout.
pub fn parse_structure(text: &str) -> Result<Crystal, IoError> {
    let mut cursor = LineCursor::new(text);
    parse_structure_block(&mut cursor)
}

pub(super) fn write_structure_block(crystal: &Crystal, comment: &str, out: &mut String) {
    use std::fmt::Write;

    writeln!(out, "{comment}").unwrap();
    writeln!(out, "1.0").unwrap();
    for i in 0..3 {
        let a = crystal.lattice.row(i);
        writeln!(out, "  {:.16e}  {:.16e}  {:.16e}", a[0], a[1], a[2]).unwrap();
    }

    // Runs of consecutive equal species become symbol/count blocks, so site
    // order survives a round trip exactly.
    let mut symbols: Vec<&str> = Vec::new();
    let mut counts: Vec<usize> = Vec::new();
    for site in &crystal.sites {
        if symbols.last() == Some(&site.species.as_str()) {
            *counts.last_mut().unwrap() += 1;
        } else {
            symbols.push(&site.species);
            counts.push(1);
        }
    }
    writeln!(out, "{}", symbols.join(" ")).unwrap();
    writeln!(
        out,
        "{}",
        counts
            .iter()
            .map(|c| c.to_string())
            .collect::<Vec<_>>()
            .join(" ")
    )
    .unwrap();
    writeln!(out, "Direct").unwrap();
    for site in &crystal.sites {
        writeln!(
            out,
            "  {:.16e}  {:.16e}  {:.16e}",
            site.frac[0], site.frac[1], site.frac[2]
        )
        .unwrap();
    }
}

/// Write a structure file that `parse_structure` reproduces bit for bit.
pub fn write_structure(crystal: &Crystal, comment: &str) -> String {
    let mut out = String::new();
    write_structure_block(crystal, comment, &mut out);
    out
}
