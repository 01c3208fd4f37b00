use std::io::{BufRead, Write};

use super::Grid;
use crate::error::{Error, Result};

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        section: "grid".into(),
        message: message.into(),
    }
}

/// Writes `N d`, then one line per point (coordinates, weight), then the distortion.
pub fn write_grid<W: Write>(grid: &Grid, out: &mut W) -> Result<()> {
    writeln!(out, "{} {}", grid.len(), grid.dim())?;
    for i in 0..grid.len() {
        let mut line = String::new();
        for x in grid.point(i) {
            line.push_str(&format!("{x:.16e} "));
        }
        line.push_str(&format!("{:.16e}", grid.weight(i)));
        writeln!(out, "{line}")?;
    }
    writeln!(out, "distortion {:.16e}", grid.distortion())?;
    Ok(())
}

/// Reads a grid written by [`write_grid`]; the distortion line is optional.
///
/// `first_line` is the 1-based line number of the header, used in diagnostics
/// when the grid is embedded in a larger file.
pub fn read_grid<I>(lines: &mut std::iter::Peekable<I>, first_line: usize) -> Result<Grid>
where
    I: Iterator<Item = (usize, String)>,
{
    let (ln, header) = lines
        .next()
        .ok_or_else(|| parse_err(first_line, "missing grid header"))?;
    let mut it = header.split_whitespace();
    let n: usize = it
        .next()
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| parse_err(ln, "bad grid size"))?;
    let d: usize = it
        .next()
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| parse_err(ln, "bad grid dimension"))?;
    let mut points = Vec::with_capacity(n * d);
    let mut weights = Vec::with_capacity(n);
    let mut last = ln;
    for _ in 0..n {
        let (ln, row) = lines
            .next()
            .ok_or_else(|| parse_err(last + 1, format!("expected {n} grid rows")))?;
        last = ln;
        let vals: Vec<f64> = row
            .split_whitespace()
            .map(|v| v.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| parse_err(ln, e.to_string()))?;
        if vals.len() != d + 1 {
            return Err(parse_err(ln, format!("expected {} values, found {}", d + 1, vals.len())));
        }
        points.extend_from_slice(&vals[..d]);
        weights.push(vals[d]);
    }
    let mut distortion = 0.0;
    if let Some((_, l)) = lines.peek() {
        if let Some(v) = l.strip_prefix("distortion") {
            let ln = last + 1;
            distortion = v.trim().parse().map_err(|_| parse_err(ln, "bad distortion"))?;
            lines.next();
        }
    }
    Grid::new(d, points, weights, distortion).map_err(|e| parse_err(last, e.to_string()))
}

/// Convenience reader over any buffered source.
pub fn read_grid_from<R: BufRead>(reader: R) -> Result<Grid> {
    let lines: Vec<(usize, String)> = reader
        .lines()
        .enumerate()
        .map(|(i, l)| l.map(|l| (i + 1, l)))
        .collect::<std::result::Result<_, _>>()?;
    let mut it = lines.into_iter().filter(|(_, l)| !l.trim().is_empty()).peekable();
    read_grid(&mut it, 1)
}
