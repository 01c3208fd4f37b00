use std::io::BufRead;

use crate::error::{Error, Result};

/// Forward prices `F_{0,t_k}` for `k = 0..=n`.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardCurve {
    values: Vec<f64>,
}

impl ForwardCurve {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("forward curve is empty"));
        }
        if let Some((k, v)) = values.iter().enumerate().find(|(_, v)| !(**v > 0.0 && v.is_finite())) {
            return Err(Error::invalid(format!("forward at date {k} is {v}, must be positive")));
        }
        Ok(Self { values })
    }

    pub fn flat(forward: f64, n: usize) -> Result<Self> {
        Self::new(vec![forward; n + 1])
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, k: usize) -> f64 {
        self.values[k]
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        section: "forward_curve".into(),
        message: message.into(),
    }
}

/// Reads `date_index,forward` rows. A non-numeric first line is taken as a header.
/// Every index in `0..=max` must appear exactly once.
pub fn read_forward_curve<R: BufRead>(reader: R) -> Result<ForwardCurve> {
    let mut rows: Vec<(usize, f64, usize)> = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let ln = i + 1;
        let s = line.trim();
        if s.is_empty() || s.starts_with('#') {
            continue;
        }
        let mut parts = s.split(',').map(str::trim);
        let (a, b) = match (parts.next(), parts.next(), parts.next()) {
            (Some(a), Some(b), None) => (a, b),
            _ => return Err(parse_err(ln, "expected two comma-separated columns")),
        };
        match (a.parse::<usize>(), b.parse::<f64>()) {
            (Ok(k), Ok(f)) => rows.push((k, f, ln)),
            _ if rows.is_empty() && a.parse::<f64>().is_err() => continue,
            _ => return Err(parse_err(ln, format!("cannot parse `{s}`"))),
        }
    }
    if rows.is_empty() {
        return Err(parse_err(1, "no forward values"));
    }
    let max = rows.iter().map(|r| r.0).max().unwrap();
    let mut values = vec![f64::NAN; max + 1];
    for &(k, f, ln) in &rows {
        if !values[k].is_nan() {
            return Err(parse_err(ln, format!("date index {k} repeated")));
        }
        values[k] = f;
    }
    if let Some(k) = values.iter().position(|v| v.is_nan()) {
        return Err(parse_err(rows.last().unwrap().2, format!("date index {k} missing")));
    }
    ForwardCurve::new(values)
}
