//! Quantization trees: per-date dilated normal grids and the quantized
//! transition probabilities between neighbouring dates.

mod io;
mod matrix;
mod transitions;

pub use io::{deserialize, read_tree, serialize, write_tree};
pub use matrix::TransitionMatrix;
pub use transitions::{
    normalized_operators, transitions_1d, transitions_gaussian_1d, transitions_is, transitions_mc,
    TransitionEstimate,
};

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::DMatrix;
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::models::{ArProcess, CovarianceChain, SpotMap};
use crate::quantizer::{optimal_grid_1d, optimal_grid_nd, Grid, NdQuantizerConfig};

/// One date of the tree: a base normal grid and its dilation `Sigma_k x`.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub base: Grid,
    pub sigma: DMatrix<f64>,
    points: Vec<f64>,
}

impl Layer {
    pub fn new(base: Grid, sigma: DMatrix<f64>) -> Result<Self> {
        let d = base.dim();
        if sigma.nrows() != d || sigma.ncols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                actual: sigma.nrows(),
            });
        }
        let mut points = Vec::with_capacity(base.points().len());
        for i in 0..base.len() {
            let x = base.point(i);
            for r in 0..d {
                let mut s = 0.0;
                for c in 0..d {
                    s += sigma[(r, c)] * x[c];
                }
                points.push(s);
            }
        }
        Ok(Self { base, sigma, points })
    }

    pub fn len(&self) -> usize {
        self.base.len()
    }

    pub fn is_empty(&self) -> bool {
        self.base.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.base.dim()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        let d = self.dim();
        &self.points[i * d..(i + 1) * d]
    }

    pub fn weights(&self) -> &[f64] {
        self.base.weights()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TreeMode {
    Structure,
    SpotDirect,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransitionMethod {
    MonteCarlo,
    ImportanceSampling,
    Quadrature,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Schedule {
    /// The same grid size on every date after the first.
    Equal,
    /// `N_k ~ 2 n N / ((k + 1) ln n)`, clamped to `[2, 10 N]`.
    Decreasing,
}

macro_rules! text_enum {
    ($t:ty { $($v:ident => $s:literal),* $(,)? }) => {
        impl fmt::Display for $t {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(match self { $(Self::$v => $s),* })
            }
        }
        impl std::str::FromStr for $t {
            type Err = Error;
            fn from_str(s: &str) -> Result<Self> {
                match s {
                    $($s => Ok(Self::$v),)*
                    _ => Err(Error::invalid(format!("unknown {} `{s}`", stringify!($t)))),
                }
            }
        }
    };
}

text_enum!(TreeMode { Structure => "structure", SpotDirect => "spot-direct" });
text_enum!(TransitionMethod { MonteCarlo => "mc", ImportanceSampling => "is", Quadrature => "quadrature" });
text_enum!(Schedule { Equal => "equal", Decreasing => "decreasing" });

/// Tree construction settings.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeConfig {
    pub points: usize,
    pub schedule: Schedule,
    pub method: TransitionMethod,
    /// Monte Carlo budget per date for the simulation methods.
    pub sample_count: usize,
    /// Size of the normal grid used by the quadrature method (default `max(500, 5 N)`).
    pub quadrature_points: usize,
    /// Sample set size used to learn multi-dimensional grids.
    pub grid_samples: usize,
    pub prune_threshold: f64,
    pub seed: u64,
    /// Fingerprint of the model the tree was built for.
    pub model_hash: String,
}

impl TreeConfig {
    pub fn new(points: usize) -> Self {
        Self {
            points,
            schedule: Schedule::Equal,
            method: TransitionMethod::Quadrature,
            sample_count: 1_000_000,
            quadrature_points: 500.max(5 * points),
            grid_samples: 4000 * points.max(1),
            prune_threshold: 0.0,
            seed: 1,
            model_hash: String::new(),
        }
    }
}

/// Build parameters recorded alongside a tree.
#[derive(Debug, Clone, PartialEq)]
pub struct BuildMeta {
    pub method: TransitionMethod,
    pub sample_count: usize,
    pub quadrature_points: usize,
    pub seed: u64,
    pub prune_threshold: f64,
    pub model_hash: String,
}

/// Sparsity statistics from [`prune`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PruneStats {
    pub entries_before: usize,
    pub entries_after: usize,
    /// `(k, row)` pairs whose entries all fell below the threshold.
    pub rescued_rows: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuantizationTree {
    pub mode: TreeMode,
    pub layers: Vec<Layer>,
    pub transitions: Vec<TransitionMatrix>,
    pub meta: BuildMeta,
    /// `(k, row)` pairs that had no sample during estimation.
    pub empty_rows: Vec<(usize, usize)>,
}

impl QuantizationTree {
    pub fn n_steps(&self) -> usize {
        self.layers.len() - 1
    }

    pub fn dim(&self) -> usize {
        self.layers[0].dim()
    }

    /// Spot price at each point of layer `k`.
    pub fn spot_values(&self, spot: &SpotMap, k: usize) -> Vec<f64> {
        let layer = &self.layers[k];
        (0..layer.len())
            .map(|i| match self.mode {
                TreeMode::Structure => spot.spot(k, layer.point(i)),
                TreeMode::SpotDirect => spot.spot_from_aggregate(k, layer.point(i)[0]),
            })
            .collect()
    }

    /// Marginals obtained by pushing the root through the transitions.
    pub fn propagated_marginals(&self) -> Vec<Vec<f64>> {
        let mut out = vec![self.layers[0].weights().to_vec()];
        for t in &self.transitions {
            let next = t.propagate(out.last().unwrap());
            out.push(next);
        }
        out
    }

    /// Total number of stored transition entries.
    pub fn nnz(&self) -> usize {
        self.transitions.iter().map(TransitionMatrix::nnz).sum()
    }
}

/// Hex SHA-256 of a model description.
pub fn model_hash(description: &str) -> String {
    Sha256::digest(description.as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// Grid sizes per date; the first date always holds a single point.
pub fn layer_sizes(schedule: Schedule, n_steps: usize, points: usize) -> Vec<usize> {
    let mut sizes = vec![1];
    let log_n = (n_steps.max(2) as f64).ln();
    for k in 1..=n_steps {
        let nk = match schedule {
            Schedule::Equal => points,
            Schedule::Decreasing => {
                let raw = 2.0 * n_steps as f64 * points as f64 / ((k + 1) as f64 * log_n);
                (raw.round() as usize).clamp(2, 10 * points)
            }
        };
        sizes.push(nk);
    }
    sizes
}

fn is_zero(m: &DMatrix<f64>) -> bool {
    m.iter().all(|v| *v == 0.0)
}

/// Optimal normal grids of the requested sizes, one learned per distinct size.
/// Dates whose factor is zero get the single-point grid.
pub fn base_grids(
    dim: usize,
    sizes: &[usize],
    zero_layers: &[bool],
    grid_samples: usize,
    seed: u64,
) -> Result<Vec<Grid>> {
    let mut cache: BTreeMap<usize, Grid> = BTreeMap::new();
    let mut out = Vec::with_capacity(sizes.len());
    for (k, &n) in sizes.iter().enumerate() {
        if zero_layers[k] || n == 1 {
            out.push(Grid::origin(dim));
            continue;
        }
        if !cache.contains_key(&n) {
            let g = if dim == 1 {
                optimal_grid_1d(n, 1e-12, 1000)?
            } else {
                optimal_grid_nd(&NdQuantizerConfig::new(n, dim, grid_samples, seed))?.0
            };
            cache.insert(n, g);
        }
        out.push(cache[&n].clone());
    }
    Ok(out)
}

/// Dilates each base grid by the matching covariance factor.
pub fn build_layers(chain: &CovarianceChain, base: &[Grid]) -> Result<Vec<Layer>> {
    if base.len() != chain.len() {
        return Err(Error::DimensionMismatch {
            expected: chain.len(),
            actual: base.len(),
        });
    }
    base.iter()
        .zip(&chain.factors)
        .map(|(g, s)| Layer::new(g.clone(), s.clone()))
        .collect()
}

fn meta(cfg: &TreeConfig, method: TransitionMethod) -> BuildMeta {
    BuildMeta {
        method,
        sample_count: cfg.sample_count,
        quadrature_points: cfg.quadrature_points,
        seed: cfg.seed,
        prune_threshold: cfg.prune_threshold,
        model_hash: cfg.model_hash.clone(),
    }
}

fn assemble(
    mode: TreeMode,
    layers: Vec<Layer>,
    estimates: Vec<TransitionEstimate>,
    meta: BuildMeta,
) -> Result<QuantizationTree> {
    let mut empty_rows = Vec::new();
    let mut transitions = Vec::with_capacity(estimates.len());
    for (k, e) in estimates.into_iter().enumerate() {
        empty_rows.extend(e.empty_rows.iter().map(|&i| (k, i)));
        transitions.push(e.matrix);
    }
    let tree = QuantizationTree {
        mode,
        layers,
        transitions,
        meta,
        empty_rows,
    };
    if tree.meta.prune_threshold > 0.0 {
        Ok(prune(&tree, tree.meta.prune_threshold)?.0)
    } else {
        Ok(tree)
    }
}

/// Quantization tree of the structure process. Dates are processed in parallel;
/// results do not depend on the number of threads.
pub fn build_tree(process: &ArProcess, chain: &CovarianceChain, cfg: &TreeConfig) -> Result<QuantizationTree> {
    let d = process.state_dimension();
    if cfg.points == 0 {
        return Err(Error::invalid("grid size must be positive"));
    }
    if cfg.method == TransitionMethod::Quadrature && d != 1 {
        return Err(Error::invalid("the quadrature method needs a one-dimensional structure process"));
    }
    let sizes = layer_sizes(cfg.schedule, process.n_steps, cfg.points);
    let zero: Vec<bool> = chain.factors.iter().map(is_zero).collect();
    let base = base_grids(d, &sizes, &zero, cfg.grid_samples, cfg.seed)?;
    let layers = build_layers(chain, &base)?;
    let quad = if cfg.method == TransitionMethod::Quadrature {
        Some(optimal_grid_1d(cfg.quadrature_points, 1e-12, 1000)?)
    } else {
        None
    };
    let estimates = (0..process.n_steps)
        .into_par_iter()
        .map(|k| match cfg.method {
            TransitionMethod::MonteCarlo => transitions_mc(process, &layers, k, cfg.sample_count, cfg.seed),
            TransitionMethod::ImportanceSampling => {
                transitions_is(process, &layers, k, cfg.sample_count, cfg.seed)
            }
            TransitionMethod::Quadrature => transitions_1d(process, &layers, k, quad.as_ref().unwrap()),
        })
        .collect::<Result<Vec<_>>>()?;
    assemble(TreeMode::Structure, layers, estimates, meta(cfg, cfg.method))
}

/// One-step correlation of the exponent aggregate `l . X_k` between `k` and `k + 1`.
pub fn aggregate_correlation(process: &ArProcess, chain: &CovarianceChain, k: usize) -> f64 {
    let l = &process.loadings;
    let s0 = (l.transpose() * &chain.covariances[k] * l)[(0, 0)];
    let s1 = (l.transpose() * &chain.covariances[k + 1] * l)[(0, 0)];
    if s0 <= 0.0 || s1 <= 0.0 {
        return 0.0;
    }
    let cross = (l.transpose() * &process.a * &chain.covariances[k] * l)[(0, 0)];
    (cross / (s0 * s1).sqrt()).clamp(-1.0, 1.0)
}

/// Tree on the scalar spot exponent, treated as if it were Markov.
///
/// Layers quantize `l . X_k ~ N(0, Lambda_k^2)`; each step uses the Gaussian
/// regression of the aggregate on its previous value. Transitions always use
/// the quadrature method.
pub fn build_spot_tree(process: &ArProcess, chain: &CovarianceChain, cfg: &TreeConfig) -> Result<QuantizationTree> {
    let n = process.n_steps;
    let l = &process.loadings;
    let scales: Vec<f64> = chain
        .covariances
        .iter()
        .map(|d| (l.transpose() * d * l)[(0, 0)].max(0.0).sqrt())
        .collect();
    let sizes = layer_sizes(cfg.schedule, n, cfg.points);
    let zero: Vec<bool> = scales.iter().map(|s| *s == 0.0).collect();
    let base = base_grids(1, &sizes, &zero, cfg.grid_samples, cfg.seed)?;
    let layers = base
        .into_iter()
        .zip(&scales)
        .map(|(g, &s)| Layer::new(g, DMatrix::from_element(1, 1, s)))
        .collect::<Result<Vec<_>>>()?;
    let quad = optimal_grid_1d(cfg.quadrature_points, 1e-12, 1000)?;
    let estimates = (0..n)
        .into_par_iter()
        .map(|k| {
            if layers[k + 1].len() == 1 {
                return Ok(TransitionEstimate {
                    matrix: TransitionMatrix::constant_rows(layers[k].len(), &[1.0]),
                    std_errors: vec![0.0; layers[k].len()],
                    empty_rows: Vec::new(),
                });
            }
            let alpha = aggregate_correlation(process, chain, k);
            let beta = (1.0 - alpha * alpha).max(0.0).sqrt();
            transitions_gaussian_1d(alpha, beta, &layers[k].base, &layers[k + 1].base, &quad)
        })
        .collect::<Result<Vec<_>>>()?;
    assemble(
        TreeMode::SpotDirect,
        layers,
        estimates,
        meta(cfg, TransitionMethod::Quadrature),
    )
}

/// Drops transition entries below `threshold` and renormalizes the rows.
pub fn prune(tree: &QuantizationTree, threshold: f64) -> Result<(QuantizationTree, PruneStats)> {
    if !(0.0..1.0).contains(&threshold) {
        return Err(Error::invalid(format!("prune threshold {threshold} outside [0, 1)")));
    }
    let mut stats = PruneStats {
        entries_before: tree.nnz(),
        ..Default::default()
    };
    let mut out = tree.clone();
    if threshold == 0.0 {
        stats.entries_after = stats.entries_before;
        return Ok((out, stats));
    }
    for (k, t) in tree.transitions.iter().enumerate() {
        let mut rows = Vec::with_capacity(t.rows());
        for i in 0..t.rows() {
            let (c, v) = t.row(i);
            let kept: Vec<(u32, f64)> = c
                .iter()
                .zip(v)
                .filter(|(_, p)| **p >= threshold)
                .map(|(&j, &p)| (j, p))
                .collect();
            let row = if kept.is_empty() {
                stats.rescued_rows.push((k, i));
                let best = (0..v.len()).fold(0, |b, p| if v[p] > v[b] { p } else { b });
                vec![(c[best], 1.0)]
            } else {
                let s: f64 = kept.iter().map(|e| e.1).sum();
                kept.into_iter().map(|(j, p)| (j, p / s)).collect()
            };
            rows.push(row);
        }
        out.transitions[k] = TransitionMatrix::from_rows(rows, t.cols())?;
    }
    out.meta.prune_threshold = threshold;
    stats.entries_after = out.nnz();
    Ok((out, stats))
}
