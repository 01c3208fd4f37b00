use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::iter::Peekable;
use std::path::Path;

use nalgebra::DMatrix;

use super::{BuildMeta, Layer, QuantizationTree, TransitionMatrix};
use crate::error::{Error, Result};
use crate::quantizer::{read_grid, write_grid};

const MAGIC: &str = "SWINGTREE 1";

fn err(line: usize, section: &str, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        section: section.into(),
        message: message.into(),
    }
}

pub fn write_tree<W: Write>(tree: &QuantizationTree, out: &mut W) -> Result<()> {
    let m = &tree.meta;
    writeln!(out, "{MAGIC}")?;
    writeln!(out, "model_hash {}", if m.model_hash.is_empty() { "-" } else { &m.model_hash })?;
    writeln!(out, "mode {}", tree.mode)?;
    writeln!(out, "method {}", m.method)?;
    writeln!(out, "seed {}", m.seed)?;
    writeln!(out, "sample_count {}", m.sample_count)?;
    writeln!(out, "quadrature_points {}", m.quadrature_points)?;
    writeln!(out, "prune_threshold {:.17e}", m.prune_threshold)?;
    writeln!(out, "dimension {}", tree.dim())?;
    writeln!(out, "layers {}", tree.layers.len())?;
    for (k, layer) in tree.layers.iter().enumerate() {
        writeln!(out, "LAYER {k}")?;
        write_grid(&layer.base, out)?;
        writeln!(out, "SIGMA")?;
        for r in 0..layer.dim() {
            let row: Vec<String> = (0..layer.dim()).map(|c| format!("{:.16e}", layer.sigma[(r, c)])).collect();
            writeln!(out, "{}", row.join(" "))?;
        }
    }
    for (k, t) in tree.transitions.iter().enumerate() {
        writeln!(out, "TRANS {k}")?;
        writeln!(out, "{} {} {}", t.rows(), t.cols(), t.nnz())?;
        for (i, j, p) in t.entries() {
            writeln!(out, "{i} {j} {p:.16e}")?;
        }
    }
    writeln!(out, "END")?;
    Ok(())
}

pub fn serialize(tree: &QuantizationTree, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_tree(tree, &mut w)?;
    w.flush()?;
    Ok(())
}

fn next_line<I: Iterator<Item = (usize, String)>>(
    lines: &mut Peekable<I>,
    last: &mut usize,
    section: &str,
) -> Result<(usize, String)> {
    match lines.next() {
        Some((ln, s)) => {
            *last = ln;
            Ok((ln, s))
        }
        None => Err(err(*last + 1, section, format!("unexpected end of file in section {section}"))),
    }
}

fn header_value<I: Iterator<Item = (usize, String)>>(
    lines: &mut Peekable<I>,
    last: &mut usize,
    key: &str,
) -> Result<(usize, String)> {
    let (ln, s) = next_line(lines, last, "header")?;
    match s.split_once(' ') {
        Some((k, v)) if k == key => Ok((ln, v.trim().to_string())),
        _ => Err(err(ln, "header", format!("expected `{key}`"))),
    }
}

fn parse<T: std::str::FromStr>(ln: usize, section: &str, v: &str) -> Result<T> {
    v.parse().map_err(|_| err(ln, section, format!("cannot parse `{v}`")))
}

pub fn read_tree<R: BufRead>(reader: R) -> Result<QuantizationTree> {
    let numbered: Vec<(usize, String)> = reader
        .lines()
        .enumerate()
        .map(|(i, l)| l.map(|l| (i + 1, l)))
        .collect::<std::result::Result<_, _>>()?;
    let end = numbered.len();
    let mut lines = numbered.into_iter().filter(|(_, l)| !l.trim().is_empty()).peekable();
    let mut last = 0;
    let (ln, magic) = next_line(&mut lines, &mut last, "header")?;
    if magic.trim() != MAGIC {
        return Err(err(ln, "header", "not a tree file"));
    }
    let (_, hash) = header_value(&mut lines, &mut last, "model_hash")?;
    let (ln, mode) = header_value(&mut lines, &mut last, "mode")?;
    let mode = mode.parse().map_err(|e: Error| err(ln, "header", e.to_string()))?;
    let (ln, method) = header_value(&mut lines, &mut last, "method")?;
    let method = method.parse().map_err(|e: Error| err(ln, "header", e.to_string()))?;
    let (ln, v) = header_value(&mut lines, &mut last, "seed")?;
    let seed = parse(ln, "header", &v)?;
    let (ln, v) = header_value(&mut lines, &mut last, "sample_count")?;
    let sample_count = parse(ln, "header", &v)?;
    let (ln, v) = header_value(&mut lines, &mut last, "quadrature_points")?;
    let quadrature_points = parse(ln, "header", &v)?;
    let (ln, v) = header_value(&mut lines, &mut last, "prune_threshold")?;
    let prune_threshold = parse(ln, "header", &v)?;
    let (ln, v) = header_value(&mut lines, &mut last, "dimension")?;
    let dim: usize = parse(ln, "header", &v)?;
    let (ln, v) = header_value(&mut lines, &mut last, "layers")?;
    let n_layers: usize = parse(ln, "header", &v)?;
    if n_layers == 0 || dim == 0 {
        return Err(err(ln, "header", "empty tree"));
    }

    let mut layers = Vec::with_capacity(n_layers);
    for k in 0..n_layers {
        let section = format!("LAYER {k}");
        let (ln, s) = next_line(&mut lines, &mut last, &section)?;
        if s.trim() != section {
            return Err(err(ln, &section, format!("missing section {section}")));
        }
        let grid = read_grid(&mut lines, ln + 1).map_err(|e| match e {
            Error::Parse { line, message, .. } => err(line, &section, message),
            other => other,
        })?;
        last = lines.peek().map_or(end, |(l, _)| l - 1);
        if grid.dim() != dim {
            return Err(err(last, &section, "grid dimension differs from header"));
        }
        let (ln, s) = next_line(&mut lines, &mut last, &section)?;
        if s.trim() != "SIGMA" {
            return Err(err(ln, &section, "expected SIGMA"));
        }
        let mut sigma = DMatrix::zeros(dim, dim);
        for r in 0..dim {
            let (ln, s) = next_line(&mut lines, &mut last, &section)?;
            let vals: Vec<f64> = s
                .split_whitespace()
                .map(|v| parse(ln, &section, v))
                .collect::<Result<_>>()?;
            if vals.len() != dim {
                return Err(err(ln, &section, "wrong SIGMA row length"));
            }
            for (c, v) in vals.into_iter().enumerate() {
                sigma[(r, c)] = v;
            }
        }
        layers.push(Layer::new(grid, sigma).map_err(|e| err(last, &section, e.to_string()))?);
    }

    let mut transitions = Vec::with_capacity(n_layers - 1);
    for k in 0..n_layers - 1 {
        let section = format!("TRANS {k}");
        let (ln, s) = next_line(&mut lines, &mut last, &section)?;
        if s.trim() != section {
            return Err(err(ln, &section, format!("missing section {section}")));
        }
        let (ln, s) = next_line(&mut lines, &mut last, &section)?;
        let dims: Vec<usize> = s
            .split_whitespace()
            .map(|v| parse(ln, &section, v))
            .collect::<Result<_>>()?;
        let [rows, cols, nnz] = dims[..] else {
            return Err(err(ln, &section, "expected `rows cols nnz`"));
        };
        if rows != layers[k].len() || cols != layers[k + 1].len() {
            return Err(err(ln, &section, "matrix shape does not match the layers"));
        }
        let mut by_row: Vec<Vec<(u32, f64)>> = vec![Vec::new(); rows];
        for _ in 0..nnz {
            let (ln, s) = next_line(&mut lines, &mut last, &section)?;
            let mut it = s.split_whitespace();
            let (Some(i), Some(j), Some(p), None) = (it.next(), it.next(), it.next(), it.next()) else {
                return Err(err(ln, &section, "expected `i j p`"));
            };
            let i: usize = parse(ln, &section, i)?;
            if i >= rows {
                return Err(err(ln, &section, format!("row {i} out of range")));
            }
            by_row[i].push((parse(ln, &section, j)?, parse(ln, &section, p)?));
        }
        transitions.push(TransitionMatrix::from_rows(by_row, cols).map_err(|e| err(last, &section, e.to_string()))?);
    }
    let (ln, s) = next_line(&mut lines, &mut last, "END")?;
    if s.trim() != "END" {
        return Err(err(ln, "END", "expected END"));
    }
    Ok(QuantizationTree {
        mode,
        layers,
        transitions,
        meta: BuildMeta {
            method,
            sample_count,
            quadrature_points,
            seed,
            prune_threshold,
            model_hash: if hash == "-" { String::new() } else { hash },
        },
        empty_rows: Vec::new(),
    })
}

pub fn deserialize(path: &Path) -> Result<QuantizationTree> {
    read_tree(BufReader::new(File::open(path)?))
}
