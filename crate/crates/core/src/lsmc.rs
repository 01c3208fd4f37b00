//! Least-squares Monte Carlo (Longstaff-Schwartz) pricing of the normalized
//! swing contract on the one-factor model.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::contract::{Mode, NormalizedContract};
use crate::error::{Error, Result};
use crate::models::{ArProcess, SpotMap};
use crate::pricer::admissible_volumes;

const PATHS_PER_STREAM: usize = 1024;

/// Simulated spot paths, `n_paths` rows of `n + 1` dates.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSet {
    pub n_paths: usize,
    pub n_dates: usize,
    pub spots: Vec<f64>,
    pub seed: u64,
}

impl PathSet {
    pub fn path(&self, p: usize) -> &[f64] {
        &self.spots[p * self.n_dates..(p + 1) * self.n_dates]
    }

    pub fn spot(&self, p: usize, k: usize) -> f64 {
        self.spots[p * self.n_dates + k]
    }
}

/// Exact simulation of the one-factor spot.
pub fn simulate_paths(process: &ArProcess, spot: &SpotMap, n_paths: usize, seed: u64) -> Result<PathSet> {
    if process.state_dimension() != 1 {
        return Err(Error::invalid("least squares pricing needs a Markov one-factor spot"));
    }
    if n_paths == 0 {
        return Err(Error::invalid("need at least one path"));
    }
    let n = process.n_steps;
    if spot.n_steps() != n {
        return Err(Error::Alignment(format!("spot map has {} steps, model {n}", spot.n_steps())));
    }
    let (a, b) = (process.a[(0, 0)], process.t[(0, 0)]);
    let width = n + 1;
    let mut spots = vec![0.0; n_paths * width];
    spots
        .par_chunks_mut(PATHS_PER_STREAM * width)
        .enumerate()
        .for_each(|(block, chunk)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(block as u64);
            for path in chunk.chunks_mut(width) {
                let mut x = 0.0;
                path[0] = spot.spot(0, &[x]);
                for (k, s) in path.iter_mut().enumerate().skip(1) {
                    let e: f64 = StandardNormal.sample(&mut rng);
                    x = a * x + b * e;
                    *s = spot.spot(k, &[x]);
                }
            }
        });
    Ok(PathSet {
        n_paths,
        n_dates: width,
        spots,
        seed,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LsResult {
    /// Full contract price (swap leg plus scaled swing part).
    pub price: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub std_error: f64,
    pub normalized_price: f64,
    pub basis_degree: usize,
    pub n_paths: usize,
    /// Dates where the regression fell back to a lower degree, with the degree used.
    pub fallbacks: Vec<(usize, usize)>,
}

/// Standardized monomial basis `1, z, ..., z^deg` with `z = (x - mean) / sd`.
#[derive(Debug, Clone, Copy)]
struct Basis {
    mean: f64,
    sd: f64,
    deg: usize,
}

impl Basis {
    fn fit(x: &[f64]) -> (f64, f64) {
        let m = x.len() as f64;
        let mean = x.iter().sum::<f64>() / m;
        let sd = (x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / m).sqrt();
        (mean, sd)
    }

    #[inline]
    fn eval(&self, x: f64, out: &mut [f64]) {
        let z = if self.sd > 0.0 { (x - self.mean) / self.sd } else { 0.0 };
        let mut v = 1.0;
        for o in out.iter_mut().take(self.deg + 1) {
            *o = v;
            v *= z;
        }
    }
}

/// Least-squares coefficients of the first `width` columns of the row-major
/// `y` (row stride `stride`) on the basis, lowering the degree while the design
/// is rank deficient. Returns the basis and a `(deg + 1) x width` matrix.
fn regress(x: &[f64], y: &[f64], stride: usize, width: usize, degree: usize) -> (Basis, DMatrix<f64>) {
    let (mean, sd) = Basis::fit(x);
    let mut deg = degree.min(x.len().saturating_sub(1));
    loop {
        let basis = Basis { mean, sd, deg };
        let cols = deg + 1;
        let mut row = vec![0.0; cols];
        let design = DMatrix::from_fn(x.len(), cols, |p, c| {
            basis.eval(x[p], &mut row);
            row[c]
        });
        let qr = design.qr();
        let r = qr.r();
        let r00 = r[(0, 0)].abs();
        let full_rank = (0..cols).all(|c| r[(c, c)].abs() > 1e-10 * r00.max(1e-300));
        if full_rank || deg == 0 {
            let q = qr.q();
            // Q^T y accumulated over blocks of paths, summed in block order.
            let partials: Vec<DMatrix<f64>> = (0..x.len())
                .collect::<Vec<_>>()
                .par_chunks(4096)
                .map(|ps| {
                    let mut acc = DMatrix::zeros(cols, width);
                    for &p in ps {
                        let yp = &y[p * stride..p * stride + width];
                        for c in 0..cols {
                            let qc = q[(p, c)];
                            for (l, v) in yp.iter().enumerate() {
                                acc[(c, l)] += qc * v;
                            }
                        }
                    }
                    acc
                })
                .collect();
            let qty = partials.into_iter().fold(DMatrix::zeros(cols, width), |a, b| a + b);
            let coef = r.solve_upper_triangular(&qty).expect("full-rank triangle");
            return (basis, coef);
        }
        deg -= 1;
    }
}

fn terminal(contract: &NormalizedContract, x: f64, volume: usize) -> f64 {
    match contract.mode {
        Mode::Penalized => contract.penalty(x, volume as f64),
        Mode::Firm => 0.0,
    }
}

/// In-sample Longstaff-Schwartz price: regressions and valuation share the paths.
pub fn ls_price(paths: &PathSet, contract: &NormalizedContract, basis_degree: usize) -> Result<LsResult> {
    ls_price_split(paths, paths, contract, basis_degree)
}

/// Realized discounted cashflows per path, row-major over admissible volumes.
struct Cashflows {
    stride: usize,
    values: Vec<f64>,
}

impl Cashflows {
    fn terminal(ps: &PathSet, contract: &NormalizedContract, window: (usize, usize)) -> Self {
        let stride = contract.n + 2;
        let mut values = vec![0.0; ps.n_paths * stride];
        let n = contract.n;
        for (p, row) in values.chunks_mut(stride).enumerate() {
            for q in window.0..=window.1 {
                row[q - window.0] = terminal(contract, ps.spot(p, n), q);
            }
        }
        Self { stride, values }
    }

    /// One backward step: exercise where the estimated continuation favours it.
    #[allow(clippy::too_many_arguments)]
    fn step(
        &mut self,
        ps: &PathSet,
        k: usize,
        window: (usize, usize),
        next: (usize, usize),
        basis: Basis,
        coef: &DMatrix<f64>,
        strike: f64,
        disc: f64,
    ) {
        let (lo, hi) = window;
        let (nlo, nhi) = next;
        let cols = basis.deg + 1;
        let nwidth = nhi - nlo + 1;
        self.values
            .par_chunks_mut(self.stride)
            .enumerate()
            .for_each_init(
                || (vec![0.0; cols], vec![0.0; nwidth], vec![0.0; hi - lo + 1]),
                |(b, cont, scratch), (p, row)| {
                    let s = ps.spot(p, k);
                    basis.eval(s, b);
                    for (l, c) in cont.iter_mut().enumerate() {
                        let col = coef.column(l);
                        *c = disc * (0..cols).map(|j| b[j] * col[j]).sum::<f64>();
                    }
                    let gain = s - strike;
                    for q in lo..=hi {
                        let stay = (q >= nlo && q <= nhi).then(|| cont[q - nlo]);
                        let take = (q + 1 >= nlo && q < nhi).then(|| gain + cont[q + 1 - nlo]);
                        let exercise = match (stay, take) {
                            (Some(a), Some(t)) => t > a,
                            (None, Some(_)) => true,
                            _ => false,
                        };
                        scratch[q - lo] = if exercise {
                            gain + disc * row[q + 1 - nlo]
                        } else {
                            disc * row[q - nlo]
                        };
                    }
                    row[..scratch.len()].copy_from_slice(scratch);
                },
            );
    }
}

/// Fits the exercise policy on `train` and values it on `eval`.
pub fn ls_price_split(
    train: &PathSet,
    eval: &PathSet,
    contract: &NormalizedContract,
    basis_degree: usize,
) -> Result<LsResult> {
    let n = contract.n;
    if train.n_dates != n + 1 || eval.n_dates != n + 1 {
        return Err(Error::Alignment(format!(
            "paths have {} dates, contract needs {}",
            train.n_dates,
            n + 1
        )));
    }
    let windows: Vec<(usize, usize)> = (0..=n)
        .map(|k| admissible_volumes(k, contract))
        .collect::<Result<_>>()?;
    let disc = (-contract.rate * contract.delta).exp();
    let same = std::ptr::eq(train, eval);
    let mut cf_train = Cashflows::terminal(train, contract, windows[n]);
    let mut cf_eval = (!same).then(|| Cashflows::terminal(eval, contract, windows[n]));
    let mut fallbacks = Vec::new();

    for k in (0..n).rev() {
        let (nlo, nhi) = windows[k + 1];
        let xs: Vec<f64> = (0..train.n_paths).map(|p| train.spot(p, k)).collect();
        let (basis, coef) = regress(&xs, &cf_train.values, cf_train.stride, nhi - nlo + 1, basis_degree);
        // The first date has a single spot value, so a constant fit is expected there.
        if basis.deg < basis_degree && k > 0 {
            fallbacks.push((k, basis.deg));
        }
        cf_train.step(train, k, windows[k], windows[k + 1], basis, &coef, contract.strike, disc);
        if let Some(cf) = cf_eval.as_mut() {
            cf.step(eval, k, windows[k], windows[k + 1], basis, &coef, contract.strike, disc);
        }
    }

    let cf = cf_eval.as_ref().unwrap_or(&cf_train);
    let values: Vec<f64> = cf.values.chunks(cf.stride).map(|r| r[0]).collect();
    let m = values.len() as f64;
    let mean = values.iter().sum::<f64>() / m;
    let var = if values.len() > 1 {
        values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1.0)
    } else {
        0.0
    };
    let se = (var / m).sqrt() * contract.scale;
    let price = contract.reconstruct(mean);
    Ok(LsResult {
        price,
        ci_low: price - 1.96 * se,
        ci_high: price + 1.96 * se,
        std_error: se,
        normalized_price: mean,
        basis_degree,
        n_paths: values.len(),
        fallbacks,
    })
}
