//! Swing contracts and their swap plus normalized-swing decomposition.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::models::ForwardCurve;

/// How the global volume constraint is enforced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Firm,
    Penalized,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Firm => "firm",
            Mode::Penalized => "penalized",
        })
    }
}

impl FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "firm" => Ok(Mode::Firm),
            "penalized" => Ok(Mode::Penalized),
            _ => Err(Error::invalid(format!("unknown mode `{s}`"))),
        }
    }
}

pub const DEFAULT_PENALTY: f64 = 10_000.0;

/// Supply contract with `n` purchase dates `t_k = k T / n`, `k < n`.
#[derive(Debug, Clone, PartialEq)]
pub struct SwingContract {
    pub n: usize,
    pub maturity: f64,
    pub strike: f64,
    pub rate: f64,
    /// Local bounds on each purchase.
    pub q_min: f64,
    pub q_max: f64,
    /// Global bounds on the total purchased volume.
    pub volume_min: f64,
    pub volume_max: f64,
    pub mode: Mode,
    pub penalty_a: f64,
    pub penalty_b: f64,
}

impl SwingContract {
    /// Unconstrained strip of `n` daily calls of size `q_max`.
    pub fn strip(n: usize, maturity: f64, strike: f64, q_max: f64) -> Self {
        Self {
            n,
            maturity,
            strike,
            rate: 0.0,
            q_min: 0.0,
            q_max,
            volume_min: 0.0,
            volume_max: n as f64 * q_max,
            mode: Mode::Penalized,
            penalty_a: DEFAULT_PENALTY,
            penalty_b: DEFAULT_PENALTY,
        }
    }

    pub fn delta(&self) -> f64 {
        self.maturity / self.n as f64
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.maturity,
            self.strike,
            self.rate,
            self.q_min,
            self.q_max,
            self.volume_min,
            self.volume_max,
            self.penalty_a,
            self.penalty_b,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !finite {
            return Err(Error::invalid("contract parameters must be finite"));
        }
        if self.n == 0 || !(self.maturity > 0.0) {
            return Err(Error::invalid("contract needs at least one date and a positive maturity"));
        }
        if !(0.0 <= self.q_min && self.q_min <= self.q_max) {
            return Err(Error::invalid(format!(
                "local bounds must satisfy 0 <= q_min <= q_max, got [{}, {}]",
                self.q_min, self.q_max
            )));
        }
        if !(0.0 <= self.volume_min && self.volume_min <= self.volume_max) {
            return Err(Error::invalid(format!(
                "global bounds must satisfy 0 <= Q_min <= Q_max, got [{}, {}]",
                self.volume_min, self.volume_max
            )));
        }
        if self.penalty_a < 0.0 || self.penalty_b < 0.0 {
            return Err(Error::invalid("penalty coefficients must be nonnegative"));
        }
        let n = self.n as f64;
        if self.mode == Mode::Firm && (n * self.q_min > self.volume_max || self.volume_min > n * self.q_max) {
            return Err(Error::Infeasible(format!(
                "no admissible consumption: [{}, {}] volume with {} dates in [{}, {}]",
                self.volume_min, self.volume_max, self.n, self.q_min, self.q_max
            )));
        }
        Ok(())
    }
}

/// The swing part in units of `q_max - q_min`, controls in `{0, 1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedContract {
    pub n: usize,
    pub delta: f64,
    pub strike: f64,
    pub rate: f64,
    pub volume_min: f64,
    pub volume_max: f64,
    pub mode: Mode,
    pub penalty_a: f64,
    pub penalty_b: f64,
    /// Value of the forced `q_min` consumption.
    pub swap_leg: f64,
    /// `q_max - q_min`; zero for a pure swap.
    pub scale: f64,
}

impl NormalizedContract {
    /// Plain normalized contract with the given bounds (no swap leg, unit scale).
    pub fn new(n: usize, delta: f64, strike: f64, volume_min: f64, volume_max: f64, mode: Mode) -> Self {
        Self {
            n,
            delta,
            strike,
            rate: 0.0,
            volume_min,
            volume_max,
            mode,
            penalty_a: DEFAULT_PENALTY,
            penalty_b: DEFAULT_PENALTY,
            swap_leg: 0.0,
            scale: 1.0,
        }
    }

    pub fn is_pure_swap(&self) -> bool {
        self.scale == 0.0
    }

    /// Price of the full contract from the normalized price.
    pub fn reconstruct(&self, normalized_price: f64) -> f64 {
        self.swap_leg + self.scale * normalized_price
    }

    /// Terminal penalty on the normalized volume `q` with terminal spot `x`.
    pub fn penalty(&self, x: f64, q: f64) -> f64 {
        penalty_value(x, q, self.volume_min, self.volume_max, self.penalty_a, self.penalty_b)
    }
}

/// `-(A x (Q_min - Q)_+ + B x (Q - Q_max)_+)`.
pub fn penalty_value(x: f64, q: f64, q_min: f64, q_max: f64, a: f64, b: f64) -> f64 {
    -(a * x * (q_min - q).max(0.0) + b * x * (q - q_max).max(0.0))
}

/// Penalty of the full contract at terminal spot `x` and total volume `q`.
pub fn penalty(x: f64, q: f64, contract: &SwingContract) -> f64 {
    penalty_value(
        x,
        q,
        contract.volume_min,
        contract.volume_max,
        contract.penalty_a,
        contract.penalty_b,
    )
}

/// `q_min sum_{k<n} e^{-r t_k} (F_{0,t_k} - K)`.
pub fn swap_value(contract: &SwingContract, forward: &ForwardCurve) -> Result<f64> {
    if forward.len() < contract.n {
        return Err(Error::invalid(format!(
            "forward curve has {} entries for {} dates",
            forward.len(),
            contract.n
        )));
    }
    let delta = contract.delta();
    Ok((0..contract.n)
        .map(|k| contract.q_min * (-contract.rate * k as f64 * delta).exp() * (forward.get(k) - contract.strike))
        .sum())
}

/// Splits a contract into its swap leg and normalized swing part.
pub fn normalize(contract: &SwingContract, forward: &ForwardCurve) -> Result<NormalizedContract> {
    contract.validate()?;
    let swap_leg = swap_value(contract, forward)?;
    let scale = contract.q_max - contract.q_min;
    let n = contract.n as f64;
    let (lo, hi) = if scale > 0.0 {
        let base = n * contract.q_min;
        (
            (contract.volume_min - base).max(0.0) / scale,
            (contract.volume_max - base).max(0.0) / scale,
        )
    } else {
        (0.0, 0.0)
    };
    Ok(NormalizedContract {
        n: contract.n,
        delta: contract.delta(),
        strike: contract.strike,
        rate: contract.rate,
        volume_min: lo,
        volume_max: hi,
        mode: contract.mode,
        penalty_a: contract.penalty_a,
        penalty_b: contract.penalty_b,
        swap_leg,
        scale: scale.max(0.0),
    })
}
