use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::matrix::{normalize_dense, TransitionMatrix};
use super::Layer;
use crate::error::{Error, Result};
use crate::models::ArProcess;
use crate::normal;
use crate::quantizer::{cell_bounds_1d, Grid, Locator};

/// Monte Carlo samples per RNG stream in the plain estimator.
const BLOCK: usize = 1 << 16;

/// Target cells further than this many conditional deviations are skipped.
const TAIL_CUTOFF: f64 = 9.0;

/// A transition matrix with per-entry standard errors (zero for deterministic methods).
#[derive(Debug, Clone)]
pub struct TransitionEstimate {
    pub matrix: TransitionMatrix,
    /// Aligned with the stored entries of `matrix`, row by row.
    pub std_errors: Vec<f64>,
    /// Source rows that received no sample and were replaced.
    pub empty_rows: Vec<usize>,
}

impl TransitionEstimate {
    fn exact(matrix: TransitionMatrix) -> Self {
        let std_errors = vec![0.0; matrix.nnz()];
        Self {
            matrix,
            std_errors,
            empty_rows: Vec::new(),
        }
    }

    /// Standard error of entry `(i, j)`; zero where the entry is not stored.
    pub fn std_error(&self, i: usize, j: usize) -> f64 {
        let (c, _) = self.matrix.row(i);
        let start: usize = (0..i).map(|r| self.matrix.row(r).0.len()).sum();
        match c.binary_search(&(j as u32)) {
            Ok(p) => self.std_errors[start + p],
            Err(_) => 0.0,
        }
    }
}

pub(crate) fn rng_for(seed: u64, k: usize, stream: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((k as u64) << 32) | stream as u64);
    rng
}

/// Normalized one-step operators `(Sigma_{k+1}^{-1} A Sigma_k, Sigma_{k+1}^{-1} T)`.
pub fn normalized_operators(
    process: &ArProcess,
    layers: &[Layer],
    k: usize,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let next = &layers[k + 1].sigma;
    let lhs = &process.a * &layers[k].sigma;
    let a = next
        .solve_lower_triangular(&lhs)
        .ok_or_else(|| Error::invalid(format!("covariance factor at step {} is singular", k + 1)))?;
    let b = next
        .solve_lower_triangular(&process.t)
        .ok_or_else(|| Error::invalid(format!("covariance factor at step {} is singular", k + 1)))?;
    Ok((a, b))
}

fn check_step(process: &ArProcess, layers: &[Layer], k: usize) -> Result<()> {
    if k + 1 >= layers.len() {
        return Err(Error::MissingTransition(format!("no layer after {k}")));
    }
    let d = process.state_dimension();
    if layers[k].dim() != d || layers[k + 1].dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            actual: layers[k].dim(),
        });
    }
    Ok(())
}

fn apply(a: &DMatrix<f64>, b: &DMatrix<f64>, u: &[f64], v: &[f64], out: &mut [f64]) {
    let d = u.len();
    for r in 0..d {
        let mut s = 0.0;
        for c in 0..d {
            s += a[(r, c)] * u[c] + b[(r, c)] * v[c];
        }
        out[r] = s;
    }
}

/// Plain Monte Carlo estimate of `pi_k` from `sample_count` pairs `(U, V)` of
/// independent standard normals.
pub fn transitions_mc(
    process: &ArProcess,
    layers: &[Layer],
    k: usize,
    sample_count: usize,
    seed: u64,
) -> Result<TransitionEstimate> {
    check_step(process, layers, k)?;
    if sample_count == 0 {
        return Err(Error::invalid("sample count must be positive"));
    }
    let (src, dst) = (&layers[k], &layers[k + 1]);
    if dst.len() == 1 {
        return Ok(TransitionEstimate::exact(TransitionMatrix::constant_rows(src.len(), &[1.0])));
    }
    let (a, b) = normalized_operators(process, layers, k)?;
    let d = src.dim();
    let (n_src, n_dst) = (src.len(), dst.len());
    let src_loc = Locator::new(&src.base);
    let dst_loc = Locator::new(&dst.base);
    let mut counts = vec![0u32; n_src * n_dst];
    let (mut u, mut v, mut t) = (vec![0.0; d], vec![0.0; d], vec![0.0; d]);
    let blocks = sample_count.div_ceil(BLOCK);
    for block in 0..blocks {
        let mut rng = rng_for(seed, k, block);
        let m = BLOCK.min(sample_count - block * BLOCK);
        for _ in 0..m {
            for x in u.iter_mut().chain(v.iter_mut()) {
                *x = StandardNormal.sample(&mut rng);
            }
            let i = if n_src == 1 { 0 } else { src_loc.nearest(&u) };
            apply(&a, &b, &u, &v, &mut t);
            let j = dst_loc.nearest(&t);
            counts[i * n_dst + j] += 1;
        }
    }
    let mut rows = Vec::with_capacity(n_src);
    let mut std_errors = Vec::new();
    let mut empty_rows = Vec::new();
    for i in 0..n_src {
        let c = &counts[i * n_dst..(i + 1) * n_dst];
        let total: f64 = c.iter().map(|&x| x as f64).sum();
        if total == 0.0 {
            empty_rows.push(i);
            let row = dense_to_row(dst.base.weights());
            std_errors.extend(std::iter::repeat_n(0.0, row.len()));
            rows.push(row);
            continue;
        }
        let acc: Vec<f64> = c.iter().map(|&x| x as f64).collect();
        let row = normalize_dense(&acc).expect("row has samples");
        for &(_, p) in &row {
            std_errors.push((p * (1.0 - p) / total).sqrt());
        }
        rows.push(row);
    }
    Ok(TransitionEstimate {
        matrix: TransitionMatrix::from_rows(rows, n_dst)?,
        std_errors,
        empty_rows,
    })
}

fn dense_to_row(w: &[f64]) -> Vec<(u32, f64)> {
    w.iter()
        .enumerate()
        .filter(|(_, p)| **p > 0.0)
        .map(|(j, p)| (j as u32, *p))
        .collect()
}

/// Importance-sampling estimate: row `i` simulates `U = x_i + eta` and reweights
/// by `exp(-|x_i|^2 / 2 - x_i . eta)`, spending `ceil(sample_count / N_k)` draws per row.
pub fn transitions_is(
    process: &ArProcess,
    layers: &[Layer],
    k: usize,
    sample_count: usize,
    seed: u64,
) -> Result<TransitionEstimate> {
    check_step(process, layers, k)?;
    if sample_count == 0 {
        return Err(Error::invalid("sample count must be positive"));
    }
    let (src, dst) = (&layers[k], &layers[k + 1]);
    if dst.len() == 1 {
        return Ok(TransitionEstimate::exact(TransitionMatrix::constant_rows(src.len(), &[1.0])));
    }
    let (a, b) = normalized_operators(process, layers, k)?;
    let d = src.dim();
    let (n_src, n_dst) = (src.len(), dst.len());
    let per_row = sample_count.div_ceil(n_src);
    let src_loc = Locator::new(&src.base);
    let dst_loc = Locator::new(&dst.base);
    let mut rows = Vec::with_capacity(n_src);
    let mut std_errors = Vec::new();
    let mut empty_rows = Vec::new();
    let (mut eta, mut v, mut u, mut t) = (vec![0.0; d], vec![0.0; d], vec![0.0; d], vec![0.0; d]);
    let mut s1 = vec![0.0; n_dst];
    let mut s2 = vec![0.0; n_dst];
    for i in 0..n_src {
        let x = src.base.point(i);
        let x2: f64 = x.iter().map(|c| c * c).sum();
        let mut rng = rng_for(seed, k, i);
        s1.iter_mut().for_each(|s| *s = 0.0);
        s2.iter_mut().for_each(|s| *s = 0.0);
        let mut s2_total = 0.0;
        for _ in 0..per_row {
            for c in eta.iter_mut().chain(v.iter_mut()) {
                *c = StandardNormal.sample(&mut rng);
            }
            let mut dot = 0.0;
            for r in 0..d {
                u[r] = x[r] + eta[r];
                dot += x[r] * eta[r];
            }
            if n_src > 1 && src_loc.nearest(&u) != i {
                continue;
            }
            let w = (-0.5 * x2 - dot).exp();
            apply(&a, &b, &u, &v, &mut t);
            let j = dst_loc.nearest(&t);
            s1[j] += w;
            s2[j] += w * w;
            s2_total += w * w;
        }
        match normalize_dense(&s1) {
            Some(row) => {
                let total: f64 = s1.iter().sum();
                for &(j, p) in &row {
                    let var = s2[j as usize] * (1.0 - 2.0 * p) + p * p * s2_total;
                    std_errors.push(var.max(0.0).sqrt() / total);
                }
                rows.push(row);
            }
            None => {
                empty_rows.push(i);
                let row = dense_to_row(dst.base.weights());
                std_errors.extend(std::iter::repeat_n(0.0, row.len()));
                rows.push(row);
            }
        }
    }
    Ok(TransitionEstimate {
        matrix: TransitionMatrix::from_rows(rows, n_dst)?,
        std_errors,
        empty_rows,
    })
}

/// Quadrature transitions for a scalar Gaussian step `U' = alpha U + beta V`
/// between the cells of two one-dimensional normal grids.
///
/// Row `i` integrates `1{U in C_i} P(U' in C_j | U)` against `N(0, 1)` shifted to
/// `x_i`, using the quantized law `quad` for the shift variable.
pub fn transitions_gaussian_1d(
    alpha: f64,
    beta: f64,
    source: &Grid,
    target: &Grid,
    quad: &Grid,
) -> Result<TransitionEstimate> {
    if source.dim() != 1 || target.dim() != 1 || quad.dim() != 1 {
        return Err(Error::invalid("quadrature transitions need one-dimensional grids"));
    }
    if !(beta >= 0.0) || !alpha.is_finite() {
        return Err(Error::invalid(format!("bad step coefficients ({alpha}, {beta})")));
    }
    let (n_src, n_dst) = (source.len(), target.len());
    if n_dst == 1 {
        return Ok(TransitionEstimate::exact(TransitionMatrix::constant_rows(n_src, &[1.0])));
    }
    let src_cells = cell_bounds_1d(source.points());
    let dst_cells = cell_bounds_1d(target.points());
    let dst_pts = target.points();
    let g = quad.points();
    let mut acc = vec![0.0; n_dst];
    let mut rows = Vec::with_capacity(n_src);
    let mut empty_rows = Vec::new();
    for (i, &(lo, hi)) in src_cells.iter().enumerate() {
        let x = source.points()[i];
        // Shifted nodes u = g_m + x lying in (lo, hi].
        let m0 = g.partition_point(|&gm| gm + x <= lo);
        let m1 = g.partition_point(|&gm| gm + x <= hi);
        acc.iter_mut().for_each(|a| *a = 0.0);
        let add = |u: f64, w: f64, acc: &mut [f64]| {
            let centre = alpha * u;
            if beta == 0.0 {
                acc[crate::quantizer::nearest_sorted(centre, dst_pts)] += w;
                return;
            }
            let j0 = dst_pts.partition_point(|&y| y < centre - TAIL_CUTOFF * beta).saturating_sub(1);
            let j1 = (dst_pts.partition_point(|&y| y <= centre + TAIL_CUTOFF * beta) + 1).min(n_dst);
            for j in j0..j1 {
                let (a, b) = dst_cells[j];
                acc[j] += w * normal::mass((a - centre) / beta, (b - centre) / beta);
            }
        };
        if m0 < m1 {
            for m in m0..m1 {
                let w = quad.weight(m) * (-0.5 * x * x - x * g[m]).exp();
                add(g[m] + x, w, &mut acc);
            }
        }
        let row = match normalize_dense(&acc) {
            Some(row) => row,
            None => {
                // No node landed in the cell: project the cell onto its centre.
                empty_rows.push(i);
                add(x, 1.0, &mut acc);
                normalize_dense(&acc).expect("projection has mass")
            }
        };
        rows.push(row);
    }
    let mut est = TransitionEstimate::exact(TransitionMatrix::from_rows(rows, n_dst)?);
    est.empty_rows = empty_rows;
    Ok(est)
}

/// One-dimensional quadrature transitions with `alpha = Sigma_k a / Sigma_{k+1}`
/// and `beta = b / Sigma_{k+1}`.
pub fn transitions_1d(process: &ArProcess, layers: &[Layer], k: usize, quad: &Grid) -> Result<TransitionEstimate> {
    check_step(process, layers, k)?;
    if process.state_dimension() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            actual: process.state_dimension(),
        });
    }
    let (s0, s1) = (layers[k].sigma[(0, 0)], layers[k + 1].sigma[(0, 0)]);
    if layers[k + 1].len() == 1 || s1 == 0.0 {
        return Ok(TransitionEstimate::exact(TransitionMatrix::constant_rows(layers[k].len(), &[1.0])));
    }
    let alpha = s0 * process.a[(0, 0)] / s1;
    let beta = process.t[(0, 0)] / s1;
    transitions_gaussian_1d(alpha, beta, &layers[k].base, &layers[k + 1].base, quad)
}
