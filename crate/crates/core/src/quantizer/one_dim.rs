use super::Grid;
use crate::error::{Error, Result};
use crate::normal;

/// Lloyd iterations run before switching to Newton, at most.
const LLOYD_WARMUP: usize = 100;
const LLOYD_MOVE_TOL: f64 = 1e-10;

/// Voronoi cell `(lower, upper)` boundaries of a sorted 1D grid.
pub fn cell_bounds_1d(points: &[f64]) -> Vec<(f64, f64)> {
    let n = points.len();
    (0..n)
        .map(|i| {
            let lo = if i == 0 {
                f64::NEG_INFINITY
            } else {
                0.5 * (points[i - 1] + points[i])
            };
            let hi = if i + 1 == n {
                f64::INFINITY
            } else {
                0.5 * (points[i] + points[i + 1])
            };
            (lo, hi)
        })
        .collect()
}

/// Per-cell probability and first moment `E(Z 1{Z in C_i})`.
fn cell_moments(points: &[f64]) -> (Vec<f64>, Vec<f64>) {
    cell_bounds_1d(points)
        .into_iter()
        .map(|(a, b)| (normal::mass(a, b), normal::pdf(a) - normal::pdf(b)))
        .unzip()
}

/// `max_i |x_i - E(Z | Z in C_i)|` for the standard normal law.
pub fn stationarity_residual_1d(points: &[f64]) -> f64 {
    let (p, m) = cell_moments(points);
    points
        .iter()
        .zip(p.iter().zip(&m))
        .map(|(x, (p, m))| (x - m / p).abs())
        .fold(0.0, f64::max)
}

fn distortion_1d(points: &[f64]) -> f64 {
    cell_bounds_1d(points)
        .into_iter()
        .zip(points)
        .map(|((a, b), &x)| {
            let p = normal::mass(a, b);
            let m = normal::pdf(a) - normal::pdf(b);
            let second = p + normal::x_pdf(a) - normal::x_pdf(b);
            second - 2.0 * x * m + x * x * p
        })
        .sum()
}

fn finish(points: Vec<f64>) -> Grid {
    let (weights, _) = cell_moments(&points);
    let distortion = distortion_1d(&points);
    Grid {
        dim: 1,
        points,
        weights,
        distortion,
    }
}

/// Newton step on the distortion gradient; the Hessian is tridiagonal.
fn newton_step(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let bounds = cell_bounds_1d(x);
    let (p, m) = cell_moments(x);
    let grad: Vec<f64> = (0..n).map(|i| 2.0 * (x[i] * p[i] - m[i])).collect();
    let mut diag = vec![0.0; n];
    let mut off = vec![0.0; n.saturating_sub(1)];
    for i in 0..n {
        let (a, b) = bounds[i];
        let mut h = 2.0 * p[i];
        if i + 1 < n {
            let c = 0.5 * normal::pdf(b) * (x[i + 1] - x[i]);
            h -= c;
            off[i] = -c;
        }
        if i > 0 {
            h -= 0.5 * normal::pdf(a) * (x[i] - x[i - 1]);
        }
        diag[i] = h;
    }
    // Thomas algorithm for H d = -grad.
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    for i in 0..n {
        let sub = if i > 0 { off[i - 1] } else { 0.0 };
        let denom = diag[i] - if i > 0 { sub * c[i - 1] } else { 0.0 };
        c[i] = if i + 1 < n { off[i] / denom } else { 0.0 };
        d[i] = (-grad[i] - if i > 0 { sub * d[i - 1] } else { 0.0 }) / denom;
    }
    for i in (0..n.saturating_sub(1)).rev() {
        d[i] -= c[i] * d[i + 1];
    }
    d
}

fn is_strictly_increasing(x: &[f64]) -> bool {
    x.windows(2).all(|w| w[0] < w[1]) && x.iter().all(|v| v.is_finite())
}

/// Optimal quadratic `n`-quantizer of `N(0, 1)`.
///
/// Starts from the normal quantiles of levels `(2i - 1) / (2n)`, runs Lloyd's
/// fixed-point map, then polishes with damped Newton steps until every point
/// is within `tolerance` of the conditional mean of its cell.
pub fn optimal_grid_1d(n: usize, tolerance: f64, max_iterations: usize) -> Result<Grid> {
    if n == 0 {
        return Err(Error::invalid("grid size must be at least 1"));
    }
    if !(tolerance > 0.0) {
        return Err(Error::invalid("tolerance must be positive"));
    }
    if n == 1 {
        return Ok(Grid::origin(1));
    }
    let mut x: Vec<f64> = (1..=n)
        .map(|i| normal::inverse_cdf((2 * i - 1) as f64 / (2 * n) as f64))
        .collect();

    let mut iterations = 0;
    while iterations < max_iterations.min(LLOYD_WARMUP) {
        let (p, m) = cell_moments(&x);
        let mut moved: f64 = 0.0;
        for i in 0..n {
            let c = m[i] / p[i];
            moved = moved.max((c - x[i]).abs());
            x[i] = c;
        }
        iterations += 1;
        if moved < LLOYD_MOVE_TOL {
            break;
        }
    }

    let mut residual = stationarity_residual_1d(&x);
    while residual > tolerance && iterations < max_iterations {
        let step = newton_step(&x);
        let mut scale = 1.0;
        let mut accepted = false;
        for _ in 0..30 {
            let trial: Vec<f64> = x.iter().zip(&step).map(|(a, s)| a + scale * s).collect();
            if is_strictly_increasing(&trial) {
                let r = stationarity_residual_1d(&trial);
                if r < residual || scale < 1e-6 {
                    x = trial;
                    residual = r;
                    accepted = true;
                    break;
                }
            }
            scale *= 0.5;
        }
        iterations += 1;
        if !accepted {
            // Newton stalled; fall back to a Lloyd step, which never breaks ordering.
            let (p, m) = cell_moments(&x);
            for i in 0..n {
                x[i] = m[i] / p[i];
            }
            residual = stationarity_residual_1d(&x);
        }
    }

    if residual > tolerance {
        return Err(Error::NonConvergence {
            iterations,
            residual,
            last: Box::new(finish(x)),
        });
    }
    Ok(finish(x))
}
