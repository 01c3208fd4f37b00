use crate::error::{Error, Result};

/// Row-stochastic transition matrix in compressed sparse row form.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix {
    rows: usize,
    cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<u32>,
    values: Vec<f64>,
}

impl TransitionMatrix {
    /// Builds from per-row `(column, value)` lists; columns must be increasing.
    pub fn from_rows(rows: Vec<Vec<(u32, f64)>>, cols: usize) -> Result<Self> {
        let mut row_ptr = Vec::with_capacity(rows.len() + 1);
        row_ptr.push(0);
        let nnz = rows.iter().map(Vec::len).sum();
        let mut col_idx = Vec::with_capacity(nnz);
        let mut values = Vec::with_capacity(nnz);
        for (i, row) in rows.iter().enumerate() {
            let mut prev: Option<u32> = None;
            for &(j, v) in row {
                if j as usize >= cols || prev.is_some_and(|p| p >= j) {
                    return Err(Error::invalid(format!("row {i}: bad column {j}")));
                }
                if !(v >= 0.0) || !v.is_finite() {
                    return Err(Error::invalid(format!("row {i}: bad probability {v}")));
                }
                prev = Some(j);
                col_idx.push(j);
                values.push(v);
            }
            row_ptr.push(col_idx.len());
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            row_ptr,
            col_idx,
            values,
        })
    }

    /// Every row equal to `weights`.
    pub fn constant_rows(rows: usize, weights: &[f64]) -> Self {
        let row: Vec<(u32, f64)> = weights
            .iter()
            .enumerate()
            .filter(|(_, w)| **w > 0.0)
            .map(|(j, w)| (j as u32, *w))
            .collect();
        Self::from_rows(vec![row; rows], weights.len()).expect("weights are valid probabilities")
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    #[inline]
    pub fn row(&self, i: usize) -> (&[u32], &[f64]) {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.col_idx[r.clone()], &self.values[r])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (c, v) = self.row(i);
        match c.binary_search(&(j as u32)) {
            Ok(p) => v[p],
            Err(_) => 0.0,
        }
    }

    pub fn row_sum(&self, i: usize) -> f64 {
        self.row(i).1.iter().sum()
    }

    /// `E[f(next) | current = i]` for every `i`.
    pub fn expect(&self, f: &[f64]) -> Vec<f64> {
        (0..self.rows)
            .map(|i| {
                let (c, v) = self.row(i);
                c.iter().zip(v).map(|(&j, p)| p * f[j as usize]).sum()
            })
            .collect()
    }

    /// Pushes a distribution forward: `mu^T P`.
    pub fn propagate(&self, mu: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.cols];
        for (i, m) in mu.iter().enumerate() {
            let (c, v) = self.row(i);
            for (&j, p) in c.iter().zip(v) {
                out[j as usize] += m * p;
            }
        }
        out
    }

    pub(crate) fn entries(&self) -> impl Iterator<Item = (usize, u32, f64)> + '_ {
        (0..self.rows).flat_map(move |i| {
            let (c, v) = self.row(i);
            c.iter().zip(v).map(move |(&j, &p)| (i, j, p))
        })
    }
}

/// Normalizes a dense accumulator into a sparse row; `None` if it is all zero.
pub(crate) fn normalize_dense(acc: &[f64]) -> Option<Vec<(u32, f64)>> {
    let total: f64 = acc.iter().sum();
    if !(total > 0.0) {
        return None;
    }
    Some(
        acc.iter()
            .enumerate()
            .filter(|(_, v)| **v > 0.0)
            .map(|(j, v)| (j as u32, v / total))
            .collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csr_access() {
        let m = TransitionMatrix::from_rows(vec![vec![(0, 0.25), (2, 0.75)], vec![(1, 1.0)]], 3).unwrap();
        assert_eq!(m.nnz(), 3);
        assert_eq!(m.get(0, 2), 0.75);
        assert_eq!(m.get(0, 1), 0.0);
        assert_eq!(m.expect(&[4.0, 1.0, 8.0]), vec![7.0, 1.0]);
        assert_eq!(m.propagate(&[0.5, 0.5]), vec![0.125, 0.5, 0.375]);
    }

    #[test]
    fn rejects_unsorted_or_negative() {
        assert!(TransitionMatrix::from_rows(vec![vec![(1, 0.5), (0, 0.5)]], 2).is_err());
        assert!(TransitionMatrix::from_rows(vec![vec![(0, -0.5)]], 2).is_err());
        assert!(TransitionMatrix::from_rows(vec![vec![(3, 1.0)]], 2).is_err());
    }
}
