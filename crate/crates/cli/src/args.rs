//! Argument types shared by the subcommands.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Args;
use machian_core::fieldgen::load_field;
use machian_core::{make_field, Boundary, FieldKind, GridSpec, ScalarField, StencilOrder};

#[derive(Args, Debug, Clone)]
pub struct Shared {
    /// Grid: `1d,n=<N>,L=<extent>[,t=<Nt>,T=<span>]` (also `2d`, `3d`).
    #[arg(long, global = true, default_value = "1d,n=256,L=6.283185307179586")]
    pub grid: String,
    /// Stencil order.
    #[arg(long, global = true, default_value_t = 4, value_parser = clap::value_parser!(u8).range(2..=4))]
    pub order: u8,
    /// Boundary treatment: periodic or clamped.
    #[arg(long, global = true, default_value = "periodic")]
    pub boundary: String,
    /// Seed for random_periodic fields that do not name one.
    #[arg(long, global = true, default_value_t = machian_core::fieldgen::DEFAULT_SEED)]
    pub seed: u64,
    /// Directory for every file the command writes.
    #[arg(long, global = true, default_value = ".")]
    pub out_dir: PathBuf,
}

impl Shared {
    pub fn grid(&self) -> Result<GridSpec> {
        let boundary: Boundary = self.boundary.parse()?;
        let order = StencilOrder::try_from(self.order).map_err(|e| anyhow::anyhow!("{e}"))?;
        parse_grid(&self.grid, boundary, order)
    }

    /// A catalog spec, or a path to a saved field when such a file exists.
    pub fn field(&self, source: &str) -> Result<ScalarField> {
        let path = Path::new(source);
        if path.is_file() {
            return load_field(path).with_context(|| format!("loading field {source}"));
        }
        let kind = FieldKind::parse_with_seed(source, self.seed)?;
        Ok(make_field(&self.grid()?, &kind)?)
    }

    pub fn out(&self, name: &str) -> Result<PathBuf> {
        std::fs::create_dir_all(&self.out_dir)
            .with_context(|| format!("creating output directory {}", self.out_dir.display()))?;
        Ok(self.out_dir.join(name))
    }
}

/// Spatial axes get `n` nodes spanning `L` with origin `−L/2`, so `x = 0`
/// is a node for even `n`. The time axis starts at 0 with spacing `T/Nt`.
pub fn parse_grid(s: &str, boundary: Boundary, order: StencilOrder) -> Result<GridSpec> {
    let mut parts = s.split(',').map(str::trim);
    let dims = match parts.next() {
        Some("1d") => 1,
        Some("2d") => 2,
        Some("3d") => 3,
        other => bail!("grid must start with 1d, 2d or 3d, got {other:?}"),
    };
    let (mut n, mut extent, mut nt, mut span) = (None, None, None, None);
    for part in parts {
        let (key, value) = part
            .split_once('=')
            .with_context(|| format!("grid entry '{part}' is not key=value"))?;
        let bad = || format!("grid entry '{part}' has a bad value");
        match key {
            "n" => n = Some(value.parse::<usize>().with_context(bad)?),
            "L" => extent = Some(value.parse::<f64>().with_context(bad)?),
            "t" => nt = Some(value.parse::<usize>().with_context(bad)?),
            "T" => span = Some(value.parse::<f64>().with_context(bad)?),
            other => bail!("unknown grid key '{other}'"),
        }
    }
    let n = n.context("grid needs n=<nodes>")?;
    let extent = extent.context("grid needs L=<extent>")?;
    if n == 0 || !(extent > 0.0) {
        bail!("grid needs n > 0 and L > 0");
    }
    let h = extent / n as f64;
    let mut shape = vec![n; dims];
    let mut origin = vec![-0.5 * extent; dims];
    let mut spacing = vec![h; dims];
    let has_time = match (nt, span) {
        (Some(nt), Some(span)) => {
            if nt == 0 || !(span > 0.0) {
                bail!("time axis needs t > 0 and T > 0");
            }
            shape.insert(0, nt);
            origin.insert(0, 0.0);
            spacing.insert(0, span / nt as f64);
            true
        }
        (None, None) => false,
        _ => bail!("time axis needs both t=<Nt> and T=<span>"),
    };
    Ok(GridSpec::new(shape, origin, spacing, has_time, boundary, order)?)
}

/// Comma-separated list of up to three numbers, zero-padded.
pub fn parse_vec3(s: &str) -> Result<[f64; 3]> {
    let values = s
        .split(',')
        .map(|v| v.trim().parse::<f64>().with_context(|| format!("bad number '{v}' in '{s}'")))
        .collect::<Result<Vec<_>>>()?;
    if values.is_empty() || values.len() > 3 {
        bail!("expected one to three components, got '{s}'");
    }
    let mut out = [0.0; 3];
    out[..values.len()].copy_from_slice(&values);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_string_forms() {
        let g = parse_grid("1d,n=1024,L=16", Boundary::Periodic, StencilOrder::Fourth).unwrap();
        assert_eq!(g.shape, vec![1024]);
        assert_eq!(g.origin, vec![-8.0]);
        assert_eq!(g.coordinate(0, 512), 0.0);
        let g = parse_grid("2d,n=8,L=2,t=5,T=1", Boundary::ClampedGhost, StencilOrder::Second).unwrap();
        assert!(g.has_time_axis);
        assert_eq!(g.shape, vec![5, 8, 8]);
        assert_eq!(g.spacing[0], 0.2);
        for bad in ["4d,n=8,L=1", "1d,n=8", "1d,L=2", "1d,n=8,L=2,t=4", "1d,n=x,L=2", "1d,n=8,L=2,q=1"] {
            assert!(parse_grid(bad, Boundary::Periodic, StencilOrder::Second).is_err(), "{bad}");
        }
    }

    #[test]
    fn vectors_pad() {
        assert_eq!(parse_vec3("0.5").unwrap(), [0.5, 0.0, 0.0]);
        assert_eq!(parse_vec3("1,2,3").unwrap(), [1.0, 2.0, 3.0]);
        assert!(parse_vec3("1,2,3,4").is_err());
        assert!(parse_vec3("a").is_err());
    }
}
