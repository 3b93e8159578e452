//! Field dumps: raw little-endian f64 values in `<stem>.bin` with the grid in
//! a `<stem>.json` sidecar, plus a CSV export of a 2-D slice.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use crate::error::{HmixError, Result};
use crate::geometry::{GridFunction, GridSpec};

pub fn field_paths(stem: &Path) -> (PathBuf, PathBuf) {
    (stem.with_extension("bin"), stem.with_extension("json"))
}

/// Writes `<stem>.bin` and `<stem>.json`; returns both paths.
pub fn write_field(stem: &Path, u: &GridFunction) -> Result<(PathBuf, PathBuf)> {
    let (bin, json) = field_paths(stem);
    let mut bytes = Vec::with_capacity(8 * u.values.len());
    for v in &u.values {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(&bin, bytes)?;
    fs::write(&json, serde_json::to_string_pretty(&*u.grid)?)?;
    Ok((bin, json))
}

pub fn read_field(stem: &Path) -> Result<GridFunction> {
    let (bin, json) = field_paths(stem);
    let grid: GridSpec = serde_json::from_str(&fs::read_to_string(&json)?)?;
    let bytes = fs::read(&bin)?;
    if bytes.len() != 8 * grid.len() {
        return Err(HmixError::Argument(format!(
            "{} holds {} bytes, grid needs {}",
            bin.display(),
            bytes.len(),
            8 * grid.len()
        )));
    }
    let values = bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    GridFunction::new(Arc::new(grid), values)
}

/// CSV of u over real axes (a, b) with every other index at the midpoint.
pub fn write_csv_slice(path: &Path, u: &GridFunction, a: usize, b: usize) -> Result<()> {
    let g = &u.grid;
    let d = g.real_dim();
    if a >= d || b >= d || a == b {
        return Err(HmixError::Argument(format!("slice axes ({a}, {b}) invalid for {d} real axes")));
    }
    let mut multi: Vec<usize> = g.shape.iter().map(|s| s / 2).collect();
    let mut f = std::io::BufWriter::new(fs::File::create(path)?);
    writeln!(f, "t{a},t{b},u")?;
    for i in 0..g.shape[a] {
        for j in 0..g.shape[b] {
            multi[a] = i;
            multi[b] = j;
            let idx = g.linear_index(&multi);
            let p = g.point(idx);
            writeln!(f, "{},{},{}", p[a], p[b], u.values[idx])?;
        }
    }
    f.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_is_bitwise() {
        let dir = tempfile::tempdir().unwrap();
        let g = Arc::new(GridSpec::cube(2, -1.0, 1.0, 5).unwrap());
        let u = GridFunction::sample(g, |p| p[0].sin() + 1e-17 * p[3]);
        let stem = dir.path().join("u");
        write_field(&stem, &u).unwrap();
        let back = read_field(&stem).unwrap();
        assert_eq!(back.values.len(), u.values.len());
        assert!(back.values.iter().zip(&u.values).all(|(a, b)| a.to_bits() == b.to_bits()));
        assert_eq!(*back.grid, *u.grid);
    }

    #[test]
    fn truncated_dump_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let g = Arc::new(GridSpec::cube(2, -1.0, 1.0, 5).unwrap());
        let stem = dir.path().join("u");
        write_field(&stem, &GridFunction::zeros(g)).unwrap();
        fs::write(stem.with_extension("bin"), [0u8; 16]).unwrap();
        assert!(read_field(&stem).is_err());
    }

    #[test]
    fn csv_slice_shape() {
        let dir = tempfile::tempdir().unwrap();
        let g = Arc::new(GridSpec::cube(2, -1.0, 1.0, 5).unwrap());
        let u = GridFunction::sample(g, |p| p[0] * p[2]);
        let path = dir.path().join("s.csv");
        write_csv_slice(&path, &u, 0, 2).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().count(), 26);
        assert!(write_csv_slice(&path, &u, 1, 1).is_err());
    }
}
