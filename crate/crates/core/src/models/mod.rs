//! Gaussian forward-curve factor models and their exact AR(1) structure processes.

mod ar;
mod forward;
mod spot;

pub use ar::{
    increment_correlation, one_factor_ar1, ou_ar1, polyfactor_ar1, psd_cholesky,
    shift_coefficients, two_factor_ar1, ArProcess, FactorSpec,
};
pub use forward::{read_forward_curve, ForwardCurve};
pub use spot::{lambda2_one_factor, lambda2_two_factor, spot_map, SpotMap};

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

/// Covariances `D_k` of the structure process and their lower-triangular factors.
#[derive(Debug, Clone)]
pub struct CovarianceChain {
    pub covariances: Vec<DMatrix<f64>>,
    pub factors: Vec<DMatrix<f64>>,
    /// `true` where `D_k` is singular (always at `k = 0`).
    pub degenerate: Vec<bool>,
}

impl CovarianceChain {
    pub fn len(&self) -> usize {
        self.covariances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.covariances.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.covariances[0].nrows()
    }

    pub fn sigma(&self, k: usize) -> &DMatrix<f64> {
        &self.factors[k]
    }
}

/// `D_0 = 0`, `D_{k+1} = A D_k A^T + T T^T` for `k < n`, with Cholesky factors.
pub fn covariance_chain(process: &ArProcess) -> Result<CovarianceChain> {
    if process.n_steps == 0 {
        return Err(Error::invalid("the process needs at least one step"));
    }
    let d = process.state_dimension();
    let noise = &process.t * process.t.transpose();
    let mut covariances = Vec::with_capacity(process.n_steps + 1);
    let mut factors = Vec::with_capacity(process.n_steps + 1);
    let mut degenerate = Vec::with_capacity(process.n_steps + 1);
    let mut dk = DMatrix::zeros(d, d);
    for k in 0..=process.n_steps {
        if k > 0 {
            dk = &process.a * &dk * process.a.transpose() + &noise;
            // Keep exact symmetry.
            dk = (&dk + dk.transpose()) * 0.5;
        }
        let sigma = psd_cholesky(&dk).ok_or(Error::NotPositiveSemidefinite { step: k })?;
        degenerate.push((0..d).any(|i| sigma[(i, i)] == 0.0));
        covariances.push(dk.clone());
        factors.push(sigma);
    }
    Ok(CovarianceChain {
        covariances,
        factors,
        degenerate,
    })
}

/// Exact simulation of structure paths; returns `n_paths` rows of `n_steps + 1`
/// states, each state stored contiguously.
pub fn simulate_states(process: &ArProcess, n_paths: usize, seed: u64) -> Vec<Vec<f64>> {
    let d = process.state_dimension();
    let n = process.n_steps;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut eps = vec![0.0; d];
    (0..n_paths)
        .map(|_| {
            let mut path = vec![0.0; (n + 1) * d];
            for k in 0..n {
                for e in eps.iter_mut() {
                    *e = StandardNormal.sample(&mut rng);
                }
                let (prev, next) = path.split_at_mut((k + 1) * d);
                let x = &prev[k * d..];
                for i in 0..d {
                    let mut v = 0.0;
                    for j in 0..d {
                        v += process.a[(i, j)] * x[j];
                    }
                    for j in 0..=i {
                        v += process.t[(i, j)] * eps[j];
                    }
                    next[i] = v;
                }
            }
            path
        })
        .collect()
}

/// Model choice as it appears in run configurations.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelSpec {
    OneFactor {
        sigma: f64,
        alpha: f64,
    },
    TwoFactor {
        sigma1: f64,
        alpha1: f64,
        sigma2: f64,
        alpha2: f64,
        rho: f64,
    },
    PolyFactor {
        factors: Vec<FactorSpec>,
        correlation: DMatrix<f64>,
    },
}

impl ModelSpec {
    pub fn process(&self, delta: f64, n_steps: usize) -> Result<ArProcess> {
        match self {
            ModelSpec::OneFactor { sigma, alpha } => one_factor_ar1(*sigma, *alpha, delta, n_steps),
            ModelSpec::TwoFactor {
                sigma1,
                alpha1,
                sigma2,
                alpha2,
                rho,
            } => two_factor_ar1((*sigma1, *alpha1), (*sigma2, *alpha2), *rho, delta, n_steps),
            ModelSpec::PolyFactor {
                factors,
                correlation,
            } => polyfactor_ar1(factors, correlation, delta, n_steps),
        }
    }

    /// Canonical text used to fingerprint trees built for this model.
    pub fn describe(&self, delta: f64, n_steps: usize) -> String {
        let body = match self {
            ModelSpec::OneFactor { sigma, alpha } => format!("one_factor {sigma:e} {alpha:e}"),
            ModelSpec::TwoFactor {
                sigma1,
                alpha1,
                sigma2,
                alpha2,
                rho,
            } => format!("two_factor {sigma1:e} {alpha1:e} {sigma2:e} {alpha2:e} {rho:e}"),
            ModelSpec::PolyFactor {
                factors,
                correlation,
            } => {
                let mut s = String::from("polyfactor");
                for f in factors {
                    s.push_str(&format!(" [{:e};", f.alpha));
                    for c in &f.poly {
                        s.push_str(&format!(" {c:e}"));
                    }
                    s.push(']');
                }
                for v in correlation.iter() {
                    s.push_str(&format!(" {v:e}"));
                }
                s
            }
        };
        format!("{body} delta={delta:e} n={n_steps}")
    }
}
