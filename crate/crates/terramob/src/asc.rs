//! ESRI ASCII raster grids.
//!
//! Header keys are matched case-insensitively. Both `xllcorner`/`yllcorner`
//! and `xllcenter`/`yllcenter` are accepted; the writer always emits corner
//! coordinates and an explicit `NODATA_value`. Values are written in the
//! shortest form that parses back to the identical `f64`.

use std::fmt::Write as _;
use std::path::Path;

use terramob_core::terrain::{ElevationGrid, TerrainError};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AscError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error(transparent)]
    Grid(#[from] TerrainError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

fn syntax(line: usize, msg: impl Into<String>) -> AscError {
    AscError::Syntax {
        line,
        msg: msg.into(),
    }
}

#[derive(Default)]
struct Header {
    ncols: Option<usize>,
    nrows: Option<usize>,
    x: Option<(f64, bool)>,
    y: Option<(f64, bool)>,
    cellsize: Option<f64>,
    nodata: Option<f64>,
}

pub fn parse_asc(text: &str) -> Result<ElevationGrid, AscError> {
    let mut header = Header::default();
    let mut lines = text.lines().enumerate().peekable();
    while let Some(&(i, line)) = lines.peek() {
        let line_no = i + 1;
        let mut parts = line.split_whitespace();
        let Some(key) = parts.next() else {
            lines.next();
            continue;
        };
        if !key.starts_with(|c: char| c.is_ascii_alphabetic()) {
            break;
        }
        let value = parts
            .next()
            .ok_or_else(|| syntax(line_no, format!("missing value for `{key}`")))?;
        if parts.next().is_some() {
            return Err(syntax(line_no, format!("trailing text after `{key}`")));
        }
        let int = || {
            value
                .parse::<usize>()
                .map_err(|_| syntax(line_no, format!("`{key}` must be a non-negative integer")))
        };
        let num = || {
            value
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| syntax(line_no, format!("`{key}` must be a finite number")))
        };
        match key.to_ascii_lowercase().as_str() {
            "ncols" => header.ncols = Some(int()?),
            "nrows" => header.nrows = Some(int()?),
            "xllcorner" => header.x = Some((num()?, false)),
            "yllcorner" => header.y = Some((num()?, false)),
            "xllcenter" => header.x = Some((num()?, true)),
            "yllcenter" => header.y = Some((num()?, true)),
            "cellsize" => header.cellsize = Some(num()?),
            "nodata_value" => header.nodata = Some(num()?),
            _ => return Err(syntax(line_no, format!("unknown header key `{key}`"))),
        }
        lines.next();
    }
    let first_data = lines.peek().map_or(text.lines().count() + 1, |(i, _)| i + 1);
    let missing = |k: &str| syntax(first_data, format!("header lacks `{k}`"));
    let ncols = header.ncols.ok_or_else(|| missing("ncols"))?;
    let nrows = header.nrows.ok_or_else(|| missing("nrows"))?;
    let cellsize = header.cellsize.ok_or_else(|| missing("cellsize"))?;
    let (x, xc) = header.x.ok_or_else(|| missing("xllcorner"))?;
    let (y, yc) = header.y.ok_or_else(|| missing("yllcorner"))?;
    let nodata = header.nodata.unwrap_or(ElevationGrid::DEFAULT_NODATA);
    let half = cellsize / 2.0;
    let xll = if xc { x - half } else { x };
    let yll = if yc { y - half } else { y };

    let expected = ncols * nrows;
    let mut values = Vec::with_capacity(expected);
    for (i, line) in lines {
        for tok in line.split_whitespace() {
            if values.len() == expected {
                return Err(syntax(i + 1, format!("more than {expected} values")));
            }
            let v = tok
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| syntax(i + 1, format!("bad value `{tok}`")))?;
            values.push(v);
        }
    }
    if values.len() != expected {
        return Err(syntax(
            text.lines().count().max(1),
            format!("expected {expected} values, found {}", values.len()),
        ));
    }
    Ok(ElevationGrid::new(ncols, nrows, xll, yll, cellsize, nodata, values)?)
}

pub fn write_asc(grid: &ElevationGrid) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "ncols {}", grid.ncols());
    let _ = writeln!(out, "nrows {}", grid.nrows());
    let _ = writeln!(out, "xllcorner {}", grid.xll());
    let _ = writeln!(out, "yllcorner {}", grid.yll());
    let _ = writeln!(out, "cellsize {}", grid.cellsize());
    let _ = writeln!(out, "NODATA_value {}", grid.nodata());
    for row in grid.values().chunks(grid.ncols()) {
        let mut first = true;
        for v in row {
            if !first {
                out.push(' ');
            }
            first = false;
            let _ = write!(out, "{v}");
        }
        out.push('\n');
    }
    out
}

pub fn read_asc(path: &Path) -> Result<ElevationGrid, AscError> {
    let text = std::fs::read_to_string(path).map_err(|source| AscError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_asc(&text)
}
