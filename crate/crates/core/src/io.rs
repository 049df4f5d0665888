//! CSV field files and content hashing.

use crate::error::{Error, Result};
use crate::grid::{DensityField, ScalarField, TorusGrid, VectorField};
use sha2::{Digest, Sha256};
use std::fmt::Write as _;
use std::path::Path;

/// Shortest round-trip decimal form of a float.
fn fmt(out: &mut String, v: f64) {
    write!(out, "{v:?}").expect("writing to a String");
}

/// One value per line in row-major node order.
pub fn scalar_csv(f: &ScalarField) -> String {
    let mut out = String::with_capacity(f.values.len() * 24);
    for &v in &f.values {
        fmt(&mut out, v);
        out.push('\n');
    }
    out
}

/// One node per line with `d` comma-separated components.
pub fn vector_csv(v: &VectorField) -> String {
    let m = v.grid.num_nodes();
    let mut out = String::with_capacity(m * 24 * v.grid.d);
    for k in 0..m {
        for (a, c) in v.components.iter().enumerate() {
            if a > 0 {
                out.push(',');
            }
            fmt(&mut out, c.values[k]);
        }
        out.push('\n');
    }
    out
}

/// Parses a one-value-per-line field file.
pub fn parse_scalar_csv(text: &str, grid: TorusGrid, path: &Path) -> Result<ScalarField> {
    let mut values = Vec::with_capacity(grid.num_nodes());
    for (line_no, line) in text.lines().enumerate() {
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let v: f64 = t.parse().map_err(|e| Error::Parse { path: path.into(), msg: format!("line {}: {e}", line_no + 1) })?;
        values.push(v);
    }
    ScalarField::new(grid, values).map_err(|e| Error::Parse { path: path.into(), msg: e.to_string() })
}

/// Reads a density CSV. Values are taken as given when their mean is one to
/// within rounding (so emitted files round-trip bit-exactly) and normalized otherwise.
pub fn read_density_csv(path: &Path, grid: TorusGrid) -> Result<DensityField> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let f = parse_scalar_csv(&text, grid, path)?;
    match DensityField::from_values(grid, f.values.clone()) {
        Ok(d) => Ok(d),
        Err(Error::NegativeDensity { node, value }) => Err(Error::NegativeDensity { node, value }),
        Err(_) => crate::grid::normalize_density(&f),
    }
}

/// Writes `bytes` to `path`, returning the lowercase hex SHA-256 of the content.
pub fn write_hashed(path: &Path, bytes: &[u8]) -> Result<String> {
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))?;
    Ok(sha256_hex(bytes))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut s = String::with_capacity(64);
    for b in digest {
        write!(s, "{b:02x}").expect("writing to a String");
    }
    s
}
