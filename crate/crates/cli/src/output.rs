use std::path::Path;

use anyhow::{Context, Result};
use lagrot::fields::ScalarField;
use lagrot::io::{scalar_from_json, scalar_to_json, to_sorted_json, write_atomic};
use serde::Serialize;

pub fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

pub fn read_scalar(path: &Path) -> Result<ScalarField> {
    scalar_from_json(&read_text(path)?).with_context(|| format!("{}", path.display()))
}

pub fn write_scalar(path: &Path, f: &ScalarField) -> Result<()> {
    write_bytes(path, scalar_to_json(f).as_bytes())
}

pub fn write_report<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write_bytes(path, to_sorted_json(value)?.as_bytes())
}

pub fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    write_atomic(path, bytes).with_context(|| format!("cannot write {}", path.display()))
}

/// CSV text with a header row and LF line endings.
pub fn csv(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}
