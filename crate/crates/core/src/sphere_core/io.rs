//! Columnar text format for grids and fields.
//!
//! ```text
//! # fracq grid n=2 kind=product resolution=16
//! x1,x2,x3,weight,value
//! -1.2e-1,...
//! ```
//! Floats are written in shortest round-trip exponent notation.

use std::io::{BufRead, Write};
use std::sync::Arc;

use super::grid::{GridField, GridKind, QuadratureGrid};
use crate::error::{Error, Result};

fn header<W: Write>(grid: &QuadratureGrid, mut w: W, with_value: bool) -> Result<W> {
    writeln!(
        w,
        "# fracq grid n={} kind={} resolution={}",
        grid.n(),
        grid.kind().as_str(),
        grid.resolution()
    )?;
    let mut cols: Vec<String> = (1..=grid.n() + 1).map(|k| format!("x{k}")).collect();
    cols.push("weight".into());
    if with_value {
        cols.push("value".into());
    }
    writeln!(w, "{}", cols.join(","))?;
    Ok(w)
}

/// Writes nodes and weights without a value column.
pub fn write_grid<W: Write>(grid: &QuadratureGrid, w: W) -> Result<()> {
    let mut w = header(grid, w, false)?;
    for (x, wt) in grid.nodes().zip(grid.weights()) {
        let mut row: Vec<String> = x.iter().map(|c| format!("{c:e}")).collect();
        row.push(format!("{wt:e}"));
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}

pub fn write_field<W: Write>(field: &GridField, w: W) -> Result<()> {
    let grid = field.grid();
    let mut w = header(grid, w, true)?;
    for ((x, wt), v) in grid.nodes().zip(grid.weights()).zip(field.values()) {
        let mut row: Vec<String> = x.iter().map(|c| format!("{c:e}")).collect();
        row.push(format!("{wt:e}"));
        row.push(format!("{v:e}"));
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}

/// Reads a field, rebuilding its grid from the metadata line and checking every node.
pub fn read_field<R: BufRead>(r: R) -> Result<GridField> {
    let mut lines = r.lines();
    let meta = lines.next().ok_or_else(|| Error::Parse("empty grid file".into()))??;
    let rest = meta
        .strip_prefix("# fracq grid")
        .ok_or_else(|| Error::Parse("missing '# fracq grid' metadata line".into()))?;
    let (mut n, mut kind, mut res) = (None, None, None);
    for tok in rest.split_whitespace() {
        let (k, v) = tok.split_once('=').ok_or_else(|| Error::Parse(format!("bad metadata token '{tok}'")))?;
        match k {
            "n" => n = v.parse::<usize>().ok(),
            "kind" => kind = Some(GridKind::parse(v)?),
            "resolution" => res = v.parse::<usize>().ok(),
            _ => {}
        }
    }
    let (n, kind, res) = match (n, kind, res) {
        (Some(n), Some(k), Some(r)) => (n, k, r),
        _ => return Err(Error::Parse("metadata must give n, kind and resolution".into())),
    };
    let grid = Arc::new(QuadratureGrid::build(n, res, kind)?);
    let cols = lines.next().ok_or_else(|| Error::Parse("missing column header".into()))??;
    if cols.split(',').count() != n + 3 || !cols.trim_end().ends_with("value") {
        return Err(Error::Parse(format!("unexpected column header '{cols}'")));
    }
    let mut values = Vec::with_capacity(grid.len());
    for (i, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        if i >= grid.len() {
            return Err(Error::Parse("more rows than grid nodes".into()));
        }
        let nums: Vec<f64> = line
            .split(',')
            .map(|s| s.trim().parse::<f64>().map_err(|e| Error::Parse(format!("row {}: {e}", i + 1))))
            .collect::<Result<_>>()?;
        if nums.len() != n + 3 {
            return Err(Error::Parse(format!("row {} has {} columns", i + 1, nums.len())));
        }
        let x = grid.node(i);
        if x.iter().zip(&nums).any(|(a, b)| (a - b).abs() > 1e-12) {
            return Err(Error::Parse(format!("row {} does not match the grid node", i + 1)));
        }
        values.push(nums[n + 2]);
    }
    if values.len() != grid.len() {
        return Err(Error::Parse(format!("expected {} rows, found {}", grid.len(), values.len())));
    }
    GridField::new(grid, values)
}
