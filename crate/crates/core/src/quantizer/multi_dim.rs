use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{Grid, KdTree};
use crate::error::{Error, Result};

/// Settings for learning a quantizer of `N(0, I_d)` from samples.
#[derive(Debug, Clone)]
pub struct NdQuantizerConfig {
    pub n: usize,
    pub dim: usize,
    /// Size of the fixed (antithetic) sample set used by the Lloyd polish.
    pub sample_count: usize,
    pub seed: u64,
    /// Competitive-learning steps before the Lloyd polish.
    pub learning_steps: usize,
    pub lloyd_iterations: usize,
    /// Lloyd stops once no point moves more than this.
    pub move_tolerance: f64,
}

impl NdQuantizerConfig {
    pub fn new(n: usize, dim: usize, sample_count: usize, seed: u64) -> Self {
        Self {
            n,
            dim,
            sample_count,
            seed,
            learning_steps: sample_count,
            lloyd_iterations: 150,
            move_tolerance: 1e-9,
        }
    }
}

/// Diagnostics of a learned grid.
#[derive(Debug, Clone)]
pub struct NdReport {
    /// Max norm of the Monte Carlo estimate of `E(X | X^) - X^` over cells.
    pub residual: f64,
    /// Standard errors of the Monte Carlo cell weights.
    pub weight_std_errors: Vec<f64>,
    /// Number of empty cells re-seeded from fresh normal samples.
    pub reseeded: usize,
    pub lloyd_iterations: usize,
}

const OVER_RELAXATION: f64 = 1.8;

fn normal_vec(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    (0..dim).map(|_| StandardNormal.sample(rng)).collect()
}

/// Optimal quadratic quantizer of `N(0, I_d)` for `d >= 2`.
///
/// A competitive-learning pass with step `1 / (N + t)` is followed by Lloyd
/// fixed-point iterations on a fixed antithetic sample set, so the result is
/// deterministic for a given seed. Weights and distortion are Monte Carlo
/// estimates over that sample set.
pub fn optimal_grid_nd(cfg: &NdQuantizerConfig) -> Result<(Grid, NdReport)> {
    let (n, d) = (cfg.n, cfg.dim);
    if d < 2 {
        return Err(Error::invalid("multi-dimensional quantizer requires d >= 2"));
    }
    if n == 0 {
        return Err(Error::invalid("grid size must be at least 1"));
    }
    if cfg.sample_count < 2 * n {
        return Err(Error::invalid(format!(
            "{} samples cannot populate {n} cells",
            cfg.sample_count
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    // Symmetric initialization: pairs ±z, plus the origin when n is odd.
    let mut x = Vec::with_capacity(n * d);
    if n % 2 == 1 {
        x.extend(std::iter::repeat(0.0).take(d));
    }
    while x.len() < n * d {
        let z = normal_vec(&mut rng, d);
        x.extend(z.iter());
        x.extend(z.iter().map(|v| -v));
    }

    // Competitive learning with antithetic stimuli.
    let mut z = vec![0.0; d];
    let mut hits = vec![1.0f64; n];
    for t in 0..cfg.learning_steps {
        if t % 2 == 0 {
            for v in z.iter_mut() {
                *v = StandardNormal.sample(&mut rng);
            }
        } else {
            for v in z.iter_mut() {
                *v = -*v;
            }
        }
        let mut best = (f64::INFINITY, 0);
        for i in 0..n {
            let d2 = super::squared_distance(&z, &x[i * d..(i + 1) * d]);
            if d2 < best.0 {
                best = (d2, i);
            }
        }
        hits[best.1] += 1.0;
        let gamma = 1.0 / hits[best.1];
        for (xi, zi) in x[best.1 * d..(best.1 + 1) * d].iter_mut().zip(&z) {
            *xi -= gamma * (*xi - zi);
        }
    }

    // Fixed antithetic sample set for the Lloyd polish.
    let m = cfg.sample_count / 2 * 2;
    let mut samples = Vec::with_capacity(m * d);
    while samples.len() < m * d {
        let z = normal_vec(&mut rng, d);
        samples.extend(z.iter());
        samples.extend(z.iter().map(|v| -v));
    }

    let mut reseeded = 0;
    let mut iterations = 0;
    let mut sums = vec![0.0; n * d];
    let mut counts = vec![0usize; n];
    let mut distortion;
    let mut converged = false;
    loop {
        let tree = KdTree::new(d, &x);
        sums.iter_mut().for_each(|v| *v = 0.0);
        counts.iter_mut().for_each(|c| *c = 0);
        distortion = 0.0;
        for s in samples.chunks_exact(d) {
            let i = tree.nearest(s);
            counts[i] += 1;
            distortion += super::squared_distance(s, &x[i * d..(i + 1) * d]);
            for (acc, v) in sums[i * d..(i + 1) * d].iter_mut().zip(s) {
                *acc += v;
            }
        }
        distortion /= m as f64;
        if converged || iterations >= cfg.lloyd_iterations {
            break;
        }
        let mut moved: f64 = 0.0;
        let omega = if iterations + 10 < cfg.lloyd_iterations { OVER_RELAXATION } else { 1.0 };
        for i in 0..n {
            let xi = &mut x[i * d..(i + 1) * d];
            if counts[i] == 0 {
                let fresh = normal_vec(&mut rng, d);
                xi.copy_from_slice(&fresh);
                reseeded += 1;
                moved = f64::INFINITY;
                continue;
            }
            let mut shift = 0.0;
            for (xv, s) in xi.iter_mut().zip(&sums[i * d..(i + 1) * d]) {
                let c = s / counts[i] as f64;
                shift += (c - *xv) * (c - *xv);
                *xv += omega * (c - *xv);
            }
            moved = moved.max(shift.sqrt());
        }
        iterations += 1;
        converged = moved < cfg.move_tolerance;
    }

    let mut residual: f64 = 0.0;
    for i in 0..n {
        if counts[i] == 0 {
            residual = f64::INFINITY;
            continue;
        }
        let r: f64 = (0..d)
            .map(|a| {
                let c = sums[i * d + a] / counts[i] as f64;
                (c - x[i * d + a]).powi(2)
            })
            .sum();
        residual = residual.max(r.sqrt());
    }
    let weights: Vec<f64> = counts.iter().map(|&c| c as f64 / m as f64).collect();
    let weight_std_errors = weights
        .iter()
        .map(|w| (w * (1.0 - w) / m as f64).sqrt())
        .collect();
    let grid = Grid::new(d, x, weights, distortion)?;
    let report = NdReport {
        residual,
        weight_std_errors,
        reseeded,
        lloyd_iterations: iterations,
    };
    Ok(sort_with_report(grid, report))
}

/// Lexicographic sort that keeps the standard errors aligned with the points.
fn sort_with_report(mut grid: Grid, mut report: NdReport) -> (Grid, NdReport) {
    let mut order: Vec<usize> = (0..grid.len()).collect();
    order.sort_by(|&a, &b| {
        grid.point(a)
            .iter()
            .zip(grid.point(b))
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    report.weight_std_errors = order.iter().map(|&i| report.weight_std_errors[i]).collect();
    grid.sort_lexicographic();
    (grid, report)
}
