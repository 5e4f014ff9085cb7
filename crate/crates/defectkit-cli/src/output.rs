//! Shared output helpers: value formatting and path-or-stdout emission.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::CliError;

/// Default display rounds to 3 decimals; `full` switches to a notation
/// that round-trips every finite `f64`.
pub fn fmt_val(value: f64, full: bool) -> String {
    if full {
        format!("{value:.16e}")
    } else {
        format!("{value:.3}")
    }
}

/// Write `content` to `path`, or to stdout when no path is given.
pub fn emit(path: Option<&Path>, content: &str) -> Result<(), CliError> {
    match path {
        Some(p) => fs::write(p, content)
            .map_err(|e| CliError::Input(format!("cannot write {}: {e}", p.display()))),
        None => {
            std::io::stdout().write_all(content.as_bytes())?;
            Ok(())
        }
    }
}
