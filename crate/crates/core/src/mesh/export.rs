//! Text snapshot formats: legacy VTK `STRUCTURED_POINTS` and `x,y,value` CSV.
//! Values are written with 17 significant digits so they read back exactly.

use std::io::{BufRead, Write};

use super::{Grid, ScalarField};
use crate::error::{NpeError, Result};

/// Formats a double with 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes named node fields sharing one grid as a legacy ASCII VTK file.
pub fn write_vtk<W: Write>(mut w: W, title: &str, fields: &[(&str, &ScalarField)]) -> Result<()> {
    let grid = match fields.first() {
        Some((_, f)) => *f.grid(),
        None => return Err(NpeError::Snapshot("no fields to write".into())),
    };
    if fields.iter().any(|(_, f)| *f.grid() != grid) {
        return Err(NpeError::GridMismatch);
    }
    writeln!(w, "# vtk DataFile Version 3.0")?;
    writeln!(w, "{}", title.replace('\n', " "))?;
    writeln!(w, "ASCII")?;
    writeln!(w, "DATASET STRUCTURED_POINTS")?;
    writeln!(w, "DIMENSIONS {} {} 1", grid.nx(), grid.ny())?;
    writeln!(w, "ORIGIN 0 0 0")?;
    writeln!(w, "SPACING {} {} 1", fmt_f64(grid.hx()), fmt_f64(grid.hy()))?;
    writeln!(w, "POINT_DATA {}", grid.len())?;
    for (name, f) in fields {
        writeln!(w, "SCALARS {name} double 1")?;
        writeln!(w, "LOOKUP_TABLE default")?;
        for row in f.values().chunks(grid.nx()) {
            let line: Vec<String> = row.iter().map(|&v| fmt_f64(v)).collect();
            writeln!(w, "{}", line.join(" "))?;
        }
    }
    Ok(())
}

/// A snapshot read back from [`write_vtk`] output.
#[derive(Debug, Clone)]
pub struct VtkSnapshot {
    pub title: String,
    pub grid: Grid,
    pub fields: Vec<(String, ScalarField)>,
}

impl VtkSnapshot {
    pub fn field(&self, name: &str) -> Option<&ScalarField> {
        self.fields.iter().find(|(n, _)| n == name).map(|(_, f)| f)
    }
}

/// Parses files written by [`write_vtk`]. Only the subset of legacy VTK this
/// crate emits is understood.
pub fn read_vtk<R: BufRead>(r: R) -> Result<VtkSnapshot> {
    let bad = |m: &str| NpeError::Snapshot(m.to_string());
    let mut lines = r.lines();
    let mut next = || -> Result<String> {
        lines
            .next()
            .ok_or_else(|| bad("unexpected end of file"))?
            .map_err(NpeError::from)
    };
    if !next()?.starts_with("# vtk DataFile") {
        return Err(bad("missing VTK header"));
    }
    let title = next()?;
    if next()?.trim() != "ASCII" {
        return Err(bad("only ASCII files are supported"));
    }
    if next()?.trim() != "DATASET STRUCTURED_POINTS" {
        return Err(bad("expected STRUCTURED_POINTS"));
    }
    let dims: Vec<usize> = next()?
        .split_whitespace()
        .skip(1)
        .map(|s| s.parse().map_err(|_| bad("bad DIMENSIONS")))
        .collect::<Result<_>>()?;
    if dims.len() != 3 || dims[2] != 1 {
        return Err(bad("expected 2D DIMENSIONS"));
    }
    next()?; // ORIGIN
    let spacing: Vec<f64> = next()?
        .split_whitespace()
        .skip(1)
        .map(|s| s.parse().map_err(|_| bad("bad SPACING")))
        .collect::<Result<_>>()?;
    if spacing.len() != 3 {
        return Err(bad("bad SPACING"));
    }
    let (nx, ny) = (dims[0], dims[1]);
    let grid = Grid::new(
        nx,
        ny,
        spacing[0] * (nx - 1) as f64,
        spacing[1] * (ny - 1) as f64,
    )?;
    next()?; // POINT_DATA
    let mut fields = Vec::new();
    loop {
        let header = match next() {
            Ok(h) if h.trim().is_empty() => continue,
            Ok(h) => h,
            Err(_) => break,
        };
        let name = header
            .strip_prefix("SCALARS ")
            .and_then(|s| s.split_whitespace().next())
            .ok_or_else(|| bad("expected SCALARS block"))?
            .to_string();
        next()?; // LOOKUP_TABLE
        let mut values = Vec::with_capacity(grid.len());
        while values.len() < grid.len() {
            for tok in next()?.split_whitespace() {
                values.push(tok.parse::<f64>().map_err(|_| bad("bad value"))?);
            }
        }
        fields.push((name, ScalarField::from_values(grid, values)?));
    }
    Ok(VtkSnapshot {
        title,
        grid,
        fields,
    })
}

/// Writes `x,y,value` rows (with a header) for one field.
pub fn write_csv<W: Write>(mut w: W, f: &ScalarField) -> Result<()> {
    let g = f.grid();
    writeln!(w, "x,y,value")?;
    for j in 0..g.ny() {
        for i in 0..g.nx() {
            writeln!(
                w,
                "{},{},{}",
                fmt_f64(g.x(i)),
                fmt_f64(g.y(j)),
                fmt_f64(f.at(i, j))
            )?;
        }
    }
    Ok(())
}
