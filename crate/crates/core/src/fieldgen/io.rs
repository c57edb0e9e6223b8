//! Field files.
//!
//! JSON: a header object
//! `{rank, has_time_axis, shape, origin, spacing, boundary, stencil_order}`
//! plus either an inline `values` array (row-major, axis 0 slowest, axis 0
//! is time when `has_time_axis`) or `values_file`, the name of a raw
//! little-endian f64 sidecar resolved relative to the header.
//!
//! CSV (rank 1 only): `coordinate,value` rows, 17 significant digits.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Boundary, GridSpec, ScalarField, StencilOrder};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FieldHeader {
    pub rank: usize,
    pub has_time_axis: bool,
    pub shape: Vec<usize>,
    pub origin: Vec<f64>,
    pub spacing: Vec<f64>,
    pub boundary: Boundary,
    pub stencil_order: StencilOrder,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values_file: Option<String>,
}

impl FieldHeader {
    pub fn for_spec(spec: &GridSpec) -> Self {
        FieldHeader {
            rank: spec.rank(),
            has_time_axis: spec.has_time_axis,
            shape: spec.shape.clone(),
            origin: spec.origin.clone(),
            spacing: spec.spacing.clone(),
            boundary: spec.boundary,
            stencil_order: spec.stencil_order,
            values: None,
            values_file: None,
        }
    }

    pub fn spec(&self) -> Result<GridSpec> {
        if self.rank != self.shape.len() {
            return Err(Error::Format(format!(
                "rank {} disagrees with shape of length {}",
                self.rank,
                self.shape.len()
            )));
        }
        GridSpec::new(
            self.shape.clone(),
            self.origin.clone(),
            self.spacing.clone(),
            self.has_time_axis,
            self.boundary,
            self.stencil_order,
        )
    }
}

fn is_csv(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"))
}

/// Writes `field` to `path`: CSV when the extension is `.csv`, JSON with
/// inline values otherwise.
pub fn save_field(field: &ScalarField, path: &Path) -> Result<()> {
    if is_csv(path) {
        return save_csv(field, path);
    }
    let mut header = FieldHeader::for_spec(field.spec());
    header.values = Some(field.values().to_vec());
    let mut text = serde_json::to_string_pretty(&header)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

/// Writes a JSON header at `path` and the values to a `.f64` sidecar next to it.
pub fn save_field_with_sidecar(field: &ScalarField, path: &Path) -> Result<()> {
    let sidecar = path.with_extension("f64");
    let name = sidecar
        .file_name()
        .and_then(|n| n.to_str())
        .ok_or_else(|| Error::Format(format!("cannot derive sidecar name from {}", path.display())))?
        .to_string();
    let mut bytes = Vec::with_capacity(8 * field.len());
    for v in field.values() {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(&sidecar, bytes)?;
    let mut header = FieldHeader::for_spec(field.spec());
    header.values_file = Some(name);
    let mut text = serde_json::to_string_pretty(&header)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

fn save_csv(field: &ScalarField, path: &Path) -> Result<()> {
    let spec = field.spec();
    if spec.rank() != 1 {
        return Err(Error::Format(format!("CSV output needs a rank-1 field, got rank {}", spec.rank())));
    }
    let mut out = Vec::new();
    writeln!(out, "coordinate,value")?;
    for (i, v) in field.values().iter().enumerate() {
        writeln!(out, "{:.16e},{:.16e}", spec.coordinate(0, i), v)?;
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn load_field(path: &Path) -> Result<ScalarField> {
    if is_csv(path) {
        return load_csv(path);
    }
    let text = fs::read_to_string(path)?;
    let mut header: FieldHeader = serde_json::from_str(&text)?;
    let spec = header.spec()?;
    let values = match (header.values.take(), header.values_file.take()) {
        (Some(v), None) => v,
        (None, Some(name)) => {
            let sidecar = path.parent().unwrap_or_else(|| Path::new(".")).join(name);
            let bytes = fs::read(&sidecar)?;
            if bytes.len() != 8 * spec.len() {
                return Err(Error::ShapeMismatch {
                    expected: spec.len(),
                    got: bytes.len() / 8,
                });
            }
            bytes
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
                .collect()
        }
        (Some(_), Some(_)) => return Err(Error::Format("both values and values_file given".into())),
        (None, None) => return Err(Error::Format("neither values nor values_file given".into())),
    };
    ScalarField::new(spec, values)
}

/// CSV carries no boundary information: loaded lines are clamped, order 4
/// (order 2 when fewer than five rows).
fn load_csv(path: &Path) -> Result<ScalarField> {
    let text = fs::read_to_string(path)?;
    let mut xs = Vec::new();
    let mut vs = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with("coordinate") {
            continue;
        }
        let (x, v) = line
            .split_once(',')
            .ok_or_else(|| Error::Format(format!("line {}: expected coordinate,value", lineno + 1)))?;
        let parse = |s: &str| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| Error::Format(format!("line {}: bad number '{s}'", lineno + 1)))
        };
        xs.push(parse(x)?);
        vs.push(parse(v)?);
    }
    if xs.len() < 3 {
        return Err(Error::Format("CSV field needs at least 3 rows".into()));
    }
    let h = (xs[xs.len() - 1] - xs[0]) / (xs.len() - 1) as f64;
    for (i, x) in xs.iter().enumerate() {
        let expected = xs[0] + i as f64 * h;
        if (x - expected).abs() > 1e-9 * h.abs().max(1.0) {
            return Err(Error::Format(format!("row {i}: coordinates are not uniformly spaced")));
        }
    }
    let order = if xs.len() >= 5 {
        StencilOrder::Fourth
    } else {
        StencilOrder::Second
    };
    let spec = GridSpec::line(xs.len(), xs[0], h, Boundary::ClampedGhost, order)?;
    ScalarField::new(spec, vs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fieldgen::{make_field, FieldKind};

    fn sample_field() -> ScalarField {
        let spec = GridSpec::new(
            vec![4, 6],
            vec![0.0, -1.5],
            vec![0.1, 0.5],
            true,
            Boundary::Periodic,
            StencilOrder::Second,
        )
        .unwrap();
        make_field(&spec, &FieldKind::random(9)).unwrap()
    }

    #[test]
    fn json_round_trip_is_bitwise() {
        let dir = tempfile::tempdir().unwrap();
        let f = sample_field();
        let p = dir.path().join("f.json");
        save_field(&f, &p).unwrap();
        let g = load_field(&p).unwrap();
        assert_eq!(f.spec(), g.spec());
        for (a, b) in f.values().iter().zip(g.values()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn sidecar_round_trip_is_bitwise() {
        let dir = tempfile::tempdir().unwrap();
        let f = sample_field();
        let p = dir.path().join("f.json");
        save_field_with_sidecar(&f, &p).unwrap();
        assert!(dir.path().join("f.f64").exists());
        let g = load_field(&p).unwrap();
        assert_eq!(f, g);
    }

    #[test]
    fn header_errors() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.json");
        fs::write(
            &p,
            r#"{"rank":1,"has_time_axis":false,"shape":[5],"origin":[0],"spacing":[1],
               "boundary":"periodic","stencil_order":4,"values":[1,2,3]}"#,
        )
        .unwrap();
        assert!(matches!(load_field(&p), Err(Error::ShapeMismatch { expected: 5, got: 3 })));
        fs::write(&p, r#"{"rank":2,"shape":[5]}"#).unwrap();
        assert!(load_field(&p).is_err());
        fs::write(
            &p,
            r#"{"rank":1,"has_time_axis":false,"shape":[5],"origin":[0],"spacing":[1],
               "boundary":"periodic","stencil_order":3,"values":[1,2,3,4,5]}"#,
        )
        .unwrap();
        assert!(load_field(&p).is_err());
    }

    #[test]
    fn csv_line_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let spec = GridSpec::line(9, -1.0, 0.25, Boundary::ClampedGhost, StencilOrder::Fourth).unwrap();
        let f = make_field(&spec, &FieldKind::gaussian(0.7)).unwrap();
        let p = dir.path().join("f.csv");
        save_field(&f, &p).unwrap();
        let g = load_field(&p).unwrap();
        assert_eq!(f.values(), g.values());
        assert_eq!(g.spec().shape, vec![9]);
        assert!((g.spec().spacing[0] - 0.25).abs() < 1e-15);
    }
}
