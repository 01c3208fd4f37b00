use nalgebra::DVector;

use super::{ArProcess, CovarianceChain, ForwardCurve};
use crate::error::{Error, Result};

/// Map from structure state to spot: `S_k = F_{0,t_k} exp(l . X_k - Lambda_k^2 / 2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpotMap {
    pub forward: ForwardCurve,
    /// Variance of the exponent `l . X_k`, i.e. `l^T D_k l`.
    pub lambda2: Vec<f64>,
    pub loadings: DVector<f64>,
    pub rate: f64,
    pub delta: f64,
}

/// Builds the spot map; `Lambda_k^2` is taken from the covariance chain.
pub fn spot_map(
    process: &ArProcess,
    chain: &CovarianceChain,
    forward: &ForwardCurve,
    rate: f64,
) -> Result<SpotMap> {
    let n = process.n_steps;
    if forward.len() != n + 1 {
        return Err(Error::invalid(format!(
            "forward curve has {} entries, expected {}",
            forward.len(),
            n + 1
        )));
    }
    if chain.len() != n + 1 {
        return Err(Error::DimensionMismatch {
            expected: n + 1,
            actual: chain.len(),
        });
    }
    if !rate.is_finite() {
        return Err(Error::invalid("rate must be finite"));
    }
    let l = &process.loadings;
    let lambda2 = chain
        .covariances
        .iter()
        .map(|d| (l.transpose() * d * l)[(0, 0)].max(0.0))
        .collect();
    Ok(SpotMap {
        forward: forward.clone(),
        lambda2,
        loadings: l.clone(),
        rate,
        delta: process.delta,
    })
}

impl SpotMap {
    pub fn n_steps(&self) -> usize {
        self.lambda2.len() - 1
    }

    /// Exponent `l . x` of a structure state.
    #[inline]
    pub fn aggregate(&self, x: &[f64]) -> f64 {
        self.loadings.iter().zip(x).map(|(a, b)| a * b).sum()
    }

    #[inline]
    pub fn spot(&self, k: usize, x: &[f64]) -> f64 {
        self.spot_from_aggregate(k, self.aggregate(x))
    }

    /// Spot as a function of the scalar exponent `y = l . X_k`.
    #[inline]
    pub fn spot_from_aggregate(&self, k: usize, y: f64) -> f64 {
        self.forward.get(k) * (y - 0.5 * self.lambda2[k]).exp()
    }

    /// `e^{-r t_k}`.
    #[inline]
    pub fn discount(&self, k: usize) -> f64 {
        (-self.rate * k as f64 * self.delta).exp()
    }

    /// One-step discount factor `e^{-r delta}`.
    pub fn step_discount(&self) -> f64 {
        (-self.rate * self.delta).exp()
    }

    /// The same spot map seen through its one-dimensional exponent aggregate.
    pub fn aggregate_map(&self) -> SpotMap {
        SpotMap {
            forward: self.forward.clone(),
            lambda2: self.lambda2.clone(),
            loadings: DVector::from_element(1, 1.0),
            rate: self.rate,
            delta: self.delta,
        }
    }
}

/// `sigma^2 / (2 alpha) (1 - e^{-2 alpha t})`.
pub fn lambda2_one_factor(sigma: f64, alpha: f64, t: f64) -> f64 {
    -sigma * sigma * (-2.0 * alpha * t).exp_m1() / (2.0 * alpha)
}

/// Two-factor exponent variance: the two one-factor terms plus the cross term
/// `2 rho sigma1 sigma2 / (alpha1 + alpha2) (1 - e^{-(alpha1 + alpha2) t})`.
pub fn lambda2_two_factor(f1: (f64, f64), f2: (f64, f64), rho: f64, t: f64) -> f64 {
    let ((s1, a1), (s2, a2)) = (f1, f2);
    let cross = -2.0 * rho * s1 * s2 * (-(a1 + a2) * t).exp_m1() / (a1 + a2);
    lambda2_one_factor(s1, a1, t) + lambda2_one_factor(s2, a2, t) + cross
}
