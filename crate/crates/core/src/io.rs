//! GridField JSON files, boundary lists, grid specifications and atomic writes.
//!
//! A field file is
//! `{"dim":d,"origin":[..],"spacing":h,"shape":[..],"kind":"scalar|vector|matrix","values":[..]}`
//! with node-major values: one number per node for scalars, `ncomp` per node
//! for vectors (`ncomp` = values / nodes) and the row-major upper triangle of
//! the symmetric matrix per node for matrices.

use std::fmt::Write as _;
use std::path::Path;

use serde::Deserialize;
use thiserror::Error;

use crate::fields::{FieldError, Grid, MatrixField, ScalarField, SymMat, VectorField};
use crate::solver::{BoundaryData, SolverError};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid field file: {0}")]
    Format(String),
    #[error("expected a {expected} field, found {found}")]
    Kind { expected: &'static str, found: String },
    #[error("invalid grid specification `{0}` (expected e.g. \"n=129,box=[-1,1]^2\")")]
    GridSpec(String),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Boundary(#[from] SolverError),
    #[error(transparent)]
    Os(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub enum GridField {
    Scalar(ScalarField),
    Vector(VectorField),
    Matrix(MatrixField),
}

impl GridField {
    pub fn grid(&self) -> &Grid {
        match self {
            Self::Scalar(f) => f.grid(),
            Self::Vector(f) => f.grid(),
            Self::Matrix(f) => f.grid(),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Self::Scalar(_) => "scalar",
            Self::Vector(_) => "vector",
            Self::Matrix(_) => "matrix",
        }
    }

    pub fn into_scalar(self) -> Result<ScalarField, IoError> {
        match self {
            Self::Scalar(f) => Ok(f),
            other => Err(IoError::Kind {
                expected: "scalar",
                found: other.kind().to_string(),
            }),
        }
    }
}

/// A float with 17 significant digits, as a JSON number.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn push_list(out: &mut String, values: impl IntoIterator<Item = f64>) {
    out.push('[');
    for (i, v) in values.into_iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        out.push_str(&fmt_f64(v));
    }
    out.push(']');
}

pub fn field_to_json(f: &GridField) -> String {
    let grid = f.grid();
    let mut out = String::new();
    let _ = write!(out, "{{\"dim\":{},\"origin\":", grid.dim());
    push_list(&mut out, grid.origin().iter().copied());
    let _ = write!(out, ",\"spacing\":{},\"shape\":[", fmt_f64(grid.spacing()));
    for (i, n) in grid.shape().iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        let _ = write!(out, "{n}");
    }
    let _ = write!(out, "],\"kind\":\"{}\",\"values\":", f.kind());
    match f {
        GridField::Scalar(s) => push_list(&mut out, s.values().iter().copied()),
        GridField::Vector(v) => push_list(&mut out, v.values().iter().copied()),
        GridField::Matrix(m) => push_list(&mut out, m.values().iter().flat_map(|s| s.upper_triangle())),
    }
    out.push_str("}\n");
    out
}

pub fn scalar_to_json(f: &ScalarField) -> String {
    field_to_json(&GridField::Scalar(f.clone()))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FieldFile {
    dim: usize,
    origin: Vec<f64>,
    spacing: f64,
    shape: Vec<usize>,
    kind: String,
    values: Vec<f64>,
}

pub fn field_from_json(text: &str) -> Result<GridField, IoError> {
    let file: FieldFile = serde_json::from_str(text)?;
    if file.origin.len() != file.dim || file.shape.len() != file.dim {
        return Err(IoError::Format(format!(
            "dim {} does not match origin ({}) and shape ({})",
            file.dim,
            file.origin.len(),
            file.shape.len()
        )));
    }
    let grid = Grid::new(file.origin, file.spacing, file.shape)?;
    let nodes = grid.len();
    match file.kind.as_str() {
        "scalar" => {
            if file.values.len() != nodes {
                return Err(IoError::Format(format!("{} values for {nodes} nodes", file.values.len())));
            }
            Ok(GridField::Scalar(ScalarField::new(grid, file.values)?))
        }
        "vector" => {
            if file.values.is_empty() || file.values.len() % nodes != 0 {
                return Err(IoError::Format(format!("{} values for {nodes} nodes", file.values.len())));
            }
            let ncomp = file.values.len() / nodes;
            Ok(GridField::Vector(VectorField::new(grid, ncomp, file.values)?))
        }
        "matrix" => {
            let per = SymMat::triangle_len(grid.dim());
            if file.values.len() != nodes * per {
                return Err(IoError::Format(format!(
                    "{} values for {nodes} nodes of {per} entries",
                    file.values.len()
                )));
            }
            let dim = grid.dim();
            let mats = file
                .values
                .chunks(per)
                .map(|c| SymMat::from_upper_triangle(dim, c).expect("chunk length checked"))
                .collect();
            Ok(GridField::Matrix(MatrixField::new(grid, mats)?))
        }
        other => Err(IoError::Format(format!("unknown kind `{other}`"))),
    }
}

pub fn scalar_from_json(text: &str) -> Result<ScalarField, IoError> {
    field_from_json(text)?.into_scalar()
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct BoundaryEntry {
    node: usize,
    value: f64,
}

/// `[{"node": k, "value": v}, ...]`, validated against `grid`.
pub fn boundary_from_json(text: &str, grid: &Grid) -> Result<BoundaryData, IoError> {
    let entries: Vec<BoundaryEntry> = serde_json::from_str(text)?;
    Ok(BoundaryData::from_pairs(
        grid,
        entries.into_iter().map(|e| (e.node, e.value)).collect(),
    )?)
}

pub fn boundary_to_json(b: &BoundaryData) -> String {
    let mut out = String::from("[\n");
    for (i, (k, v)) in b.pairs().iter().enumerate() {
        let sep = if i + 1 == b.pairs().len() { "" } else { "," };
        let _ = writeln!(out, "  {{\"node\": {k}, \"value\": {}}}{sep}", fmt_f64(*v));
    }
    out.push_str("]\n");
    out
}

/// Parses `n=<nodes>,box=[<lo>,<hi>]^<dim>` into a cube grid.
pub fn parse_grid_spec(spec: &str) -> Result<Grid, IoError> {
    let bad = || IoError::GridSpec(spec.to_string());
    let compact: String = spec.chars().filter(|c| !c.is_whitespace()).collect();
    let rest = compact.strip_prefix("n=").ok_or_else(bad)?;
    let (n, rest) = rest.split_once(',').ok_or_else(bad)?;
    let n: usize = n.parse().map_err(|_| bad())?;
    let inner = rest.strip_prefix("box=[").ok_or_else(bad)?;
    let (bounds, dim) = inner.split_once("]^").ok_or_else(bad)?;
    let (lo, hi) = bounds.split_once(',').ok_or_else(bad)?;
    let lo: f64 = lo.parse().map_err(|_| bad())?;
    let hi: f64 = hi.parse().map_err(|_| bad())?;
    let dim: usize = dim.parse().map_err(|_| bad())?;
    if !(hi > lo) {
        return Err(bad());
    }
    Ok(Grid::cube(dim, lo, hi, n)?)
}

/// Pretty JSON with keys in sorted order.
pub fn to_sorted_json<T: serde::Serialize>(value: &T) -> Result<String, IoError> {
    // `serde_json::Value` objects are BTreeMaps, so a round trip sorts keys.
    let v = serde_json::to_value(value)?;
    let mut s = serde_json::to_string_pretty(&v)?;
    s.push('\n');
    Ok(s)
}

/// Writes through a temporary file in the same directory, then renames.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), IoError> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path
        .file_name()
        .ok_or_else(|| IoError::Format(format!("`{}` is not a file path", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    std::fs::write(&tmp, contents)?;
    if let Err(e) = std::fs::rename(&tmp, path) {
        let _ = std::fs::remove_file(&tmp);
        return Err(e.into());
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalar_round_trip_is_bit_exact() {
        let g = Grid::cube(2, -1.0, 1.0, 5).unwrap();
        let f = ScalarField::from_fn(&g, |x| (x[0] * 3.1).sin() / 7.0 + x[1] * 1e-300).unwrap();
        let back = scalar_from_json(&scalar_to_json(&f)).unwrap();
        assert_eq!(back, f);
    }

    #[test]
    fn matrix_and_vector_round_trip() {
        let g = Grid::cube(3, 0.0, 1.0, 3).unwrap();
        let m = MatrixField::from_fn(&g, |x| SymMat::from_fn(3, |i, j| x[i] * (j as f64 + 0.1))).unwrap();
        let back = field_from_json(&field_to_json(&GridField::Matrix(m.clone()))).unwrap();
        assert_eq!(back, GridField::Matrix(m));
        let v = VectorField::new(g.clone(), 2, (0..2 * g.len()).map(|i| i as f64 / 3.0).collect()).unwrap();
        let back = field_from_json(&field_to_json(&GridField::Vector(v.clone()))).unwrap();
        assert_eq!(back, GridField::Vector(v));
    }

    #[test]
    fn malformed_input_is_rejected() {
        assert!(matches!(field_from_json("{"), Err(IoError::Json(_))));
        let wrong = r#"{"dim":1,"origin":[0],"spacing":0.5,"shape":[3],"kind":"scalar","values":[1,2]}"#;
        assert!(matches!(field_from_json(wrong), Err(IoError::Format(_))));
        let kind = r#"{"dim":1,"origin":[0],"spacing":0.5,"shape":[3],"kind":"tensor","values":[1,2,3]}"#;
        assert!(field_from_json(kind).is_err());
    }

    #[test]
    fn grid_spec_parses() {
        let g = parse_grid_spec("n=129,box=[-1,1]^2").unwrap();
        assert_eq!(g.shape(), &[129, 129]);
        assert!((g.spacing() - 2.0 / 128.0).abs() < 1e-15);
        assert!(parse_grid_spec("n=9, box=[0, 2]^1").is_ok());
        assert!(parse_grid_spec("box=[0,1]^2").is_err());
        assert!(parse_grid_spec("n=9,box=[1,0]^2").is_err());
    }

    #[test]
    fn boundary_round_trip() {
        let g = Grid::cube(2, 0.0, 1.0, 4).unwrap();
        let b = BoundaryData::from_fn(&g, |x| x[0] - x[1]);
        let back = boundary_from_json(&boundary_to_json(&b), &g).unwrap();
        assert_eq!(back, b);
    }

    #[test]
    fn sorted_json_orders_keys() {
        #[derive(serde::Serialize)]
        struct S {
            zeta: u8,
            alpha: u8,
        }
        let s = to_sorted_json(&S { zeta: 1, alpha: 2 }).unwrap();
        assert!(s.find("alpha").unwrap() < s.find("zeta").unwrap());
    }
}
