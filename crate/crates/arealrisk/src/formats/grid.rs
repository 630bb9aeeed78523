//! ESRI ASCII grids: a six-line header (`ncols`, `nrows`, `xllcorner`,
//! `yllcorner`, `cellsize`, `nodata_value`) followed by row-major values,
//! top row first. `xllcenter`/`yllcenter` headers are accepted.

use std::fmt::Write;
use std::path::Path;

use arealrisk_core::exposure::ElevationGrid;

use super::{read_text, write_atomic};
use crate::error::{Error, Result};

const DEFAULT_NODATA: f64 = -9999.0;

pub fn read_ascii_grid(path: &Path) -> Result<ElevationGrid> {
    let text = read_text(path)?;
    let mut tokens = text.split_whitespace().peekable();
    let (mut ncols, mut nrows, mut x0, mut y0, mut cell, mut nodata) = (None, None, None, None, None, DEFAULT_NODATA);
    let mut centered = (false, false);
    while let Some(key) = tokens.peek().filter(|t| t.chars().next().is_some_and(char::is_alphabetic)) {
        let key = key.to_ascii_lowercase();
        tokens.next();
        let value = tokens.next().ok_or_else(|| Error::format(path, format!("header {key} has no value")))?;
        let number: f64 = value.parse().map_err(|_| Error::format(path, format!("header {key} = {value:?} is not a number")))?;
        match key.as_str() {
            "ncols" => ncols = Some(number as usize),
            "nrows" => nrows = Some(number as usize),
            "xllcorner" => x0 = Some(number),
            "yllcorner" => y0 = Some(number),
            "xllcenter" => (x0, centered.0) = (Some(number), true),
            "yllcenter" => (y0, centered.1) = (Some(number), true),
            "cellsize" => cell = Some(number),
            "nodata_value" => nodata = number,
            _ => return Err(Error::format(path, format!("unknown header {key}"))),
        }
    }
    let missing = |name: &str| Error::format(path, format!("missing header {name}"));
    let (ncols, nrows) = (ncols.ok_or_else(|| missing("ncols"))?, nrows.ok_or_else(|| missing("nrows"))?);
    let cell = cell.ok_or_else(|| missing("cellsize"))?;
    let mut x0 = x0.ok_or_else(|| missing("xllcorner"))?;
    let mut y0 = y0.ok_or_else(|| missing("yllcorner"))?;
    if centered.0 {
        x0 -= cell / 2.0;
    }
    if centered.1 {
        y0 -= cell / 2.0;
    }
    let values = tokens
        .enumerate()
        .map(|(k, t)| t.parse::<f64>().map_err(|_| Error::format(path, format!("value {k}: {t:?} is not a number"))))
        .collect::<Result<Vec<_>>>()?;
    ElevationGrid::new(x0, y0, cell, ncols, nrows, values, nodata).map_err(|e| Error::format(path, e))
}

pub fn write_ascii_grid(path: &Path, grid: &ElevationGrid) -> Result<()> {
    let mut out = String::new();
    let _ = writeln!(out, "ncols {}", grid.n_cols);
    let _ = writeln!(out, "nrows {}", grid.n_rows);
    let _ = writeln!(out, "xllcorner {}", grid.x_lower_left);
    let _ = writeln!(out, "yllcorner {}", grid.y_lower_left);
    let _ = writeln!(out, "cellsize {}", grid.cell_size);
    let _ = writeln!(out, "nodata_value {}", grid.nodata);
    for row in grid.values.chunks(grid.n_cols) {
        let line: Vec<String> = row.iter().map(f64::to_string).collect();
        let _ = writeln!(out, "{}", line.join(" "));
    }
    write_atomic(path, out.as_bytes())
}
