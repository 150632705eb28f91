//! Plain sample files: one value per line, `#` comment lines allowed.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use gbtail_core::SortedSample;

use crate::error::{Error, Result};

/// Reads a sample file. A single non-numeric first line is taken as a column header.
pub fn read_sample(path: &Path) -> Result<SortedSample> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut values = Vec::new();
    let mut seen_data = false;
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let token = line.split([',', '\t', ' ']).next().unwrap_or("");
        match token.parse::<f64>() {
            Ok(v) if v.is_finite() && v > 0.0 => values.push(v),
            Ok(v) => {
                return Err(Error::parse(
                    path,
                    format!("line {}: value {v} is not positive", i + 1),
                ))
            }
            Err(_) if !seen_data => {}
            Err(_) => {
                return Err(Error::parse(
                    path,
                    format!("line {}: {token:?} is not a number", i + 1),
                ))
            }
        }
        seen_data = true;
    }
    if values.is_empty() {
        return Err(Error::parse(path, "no sample values"));
    }
    let label = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    Ok(SortedSample::new(values, label)?)
}

/// Writes `comments` as `# ` lines followed by the values in shortest round-trip form.
pub fn write_sample(path: &Path, comments: &[String], sample: &SortedSample) -> Result<()> {
    let mut out = String::with_capacity(sample.len() * 20);
    for c in comments {
        let _ = writeln!(out, "# {c}");
    }
    for v in sample.values() {
        let _ = writeln!(out, "{v}");
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}
