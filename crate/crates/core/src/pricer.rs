//! Backward dynamic programming for swing contracts on a quantization tree.
//!
//! The state at date `k` is a layer point `i` and an integer cumulative volume
//! of the normalized contract; controls are `0` or `1`.

use rayon::prelude::*;

use crate::contract::{Mode, NormalizedContract};
use crate::error::{Error, Result};
use crate::models::SpotMap;
use crate::tree::QuantizationTree;

/// Snaps values within `1e-9` of an integer before rounding.
fn ceil_tol(x: f64) -> i64 {
    let r = x.round();
    if (x - r).abs() < 1e-9 {
        r as i64
    } else {
        x.ceil() as i64
    }
}

fn floor_tol(x: f64) -> i64 {
    let r = x.round();
    if (x - r).abs() < 1e-9 {
        r as i64
    } else {
        x.floor() as i64
    }
}

/// Admissible cumulative volumes `lo..=hi` at date `k`.
///
/// Penalized: `0..=k`. Firm: volumes from which the integer terminal window
/// `[ceil(Q_min), floor(Q_max)]` is still reachable.
pub fn admissible_volumes(k: usize, contract: &NormalizedContract) -> Result<(usize, usize)> {
    let n = contract.n;
    if k > n {
        return Err(Error::invalid(format!("date {k} beyond the last date {n}")));
    }
    match contract.mode {
        Mode::Penalized => Ok((0, k)),
        Mode::Firm => {
            let need = ceil_tol(contract.volume_min).max(0);
            let cap = floor_tol(contract.volume_max);
            let lo = (need - (n - k) as i64).max(0);
            let hi = cap.min(k as i64);
            if lo > hi || need > cap.min(n as i64) {
                return Err(Error::Infeasible(format!(
                    "no admissible volume at date {k}: window [{}, {}] with {n} dates",
                    contract.volume_min, contract.volume_max
                )));
            }
            Ok((lo as usize, hi as usize))
        }
    }
}

/// Values on the admissible volumes of one layer, point-major.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerValues {
    pub lo: usize,
    pub hi: usize,
    pub values: Vec<f64>,
}

impl LayerValues {
    pub fn width(&self) -> usize {
        self.hi - self.lo + 1
    }

    /// `None` for volumes outside the admissible window.
    pub fn get(&self, i: usize, volume: usize) -> Option<f64> {
        if volume < self.lo || volume > self.hi {
            return None;
        }
        Some(self.values[i * self.width() + volume - self.lo])
    }
}

/// Values `P(t_k, x_k^i, Q)` for every date.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueSlice {
    pub layers: Vec<LayerValues>,
}

impl ValueSlice {
    pub fn get(&self, k: usize, i: usize, volume: usize) -> Option<f64> {
        self.layers[k].get(i, volume)
    }
}

/// Optimal decisions `q*(k, i, Q)` for dates `k < n`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyTable {
    pub layers: Vec<(usize, usize, Vec<u8>)>,
}

impl PolicyTable {
    /// `None` for inadmissible volumes.
    pub fn decision(&self, k: usize, i: usize, volume: usize) -> Option<u8> {
        let (lo, hi, q) = &self.layers[k];
        if volume < *lo || volume > *hi {
            return None;
        }
        Some(q[i * (hi - lo + 1) + volume - lo])
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PricingOptions {
    pub keep_values: bool,
    pub keep_policy: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PricingResult {
    /// Price of the full contract.
    pub price: f64,
    pub normalized_price: f64,
    pub swap_leg: f64,
    /// `sum_k (#volumes at k+1) * nnz(pi_k)`.
    pub operations: u64,
    pub values: Option<ValueSlice>,
    pub policy: Option<PolicyTable>,
}

fn check_alignment(tree: &QuantizationTree, spot: &SpotMap, contract: &NormalizedContract) -> Result<()> {
    if tree.n_steps() != contract.n || spot.n_steps() != contract.n {
        return Err(Error::Alignment(format!(
            "tree has {} steps, spot map {}, contract {} dates",
            tree.n_steps(),
            spot.n_steps(),
            contract.n
        )));
    }
    if (spot.delta - contract.delta).abs() > 1e-12 * contract.delta.max(1.0) {
        return Err(Error::Alignment(format!(
            "model step {} differs from contract step {}",
            spot.delta, contract.delta
        )));
    }
    if tree.transitions.len() != contract.n {
        return Err(Error::MissingTransition(format!(
            "{} transition matrices for {} steps",
            tree.transitions.len(),
            contract.n
        )));
    }
    if !(contract.volume_min <= contract.volume_max) || contract.volume_min < 0.0 || contract.scale < 0.0 {
        return Err(Error::invalid("contract is not normalized"));
    }
    Ok(())
}

/// Prices in the contract's own mode.
pub fn price(
    tree: &QuantizationTree,
    spot: &SpotMap,
    contract: &NormalizedContract,
    options: PricingOptions,
) -> Result<PricingResult> {
    check_alignment(tree, spot, contract)?;
    if contract.is_pure_swap() {
        return Ok(PricingResult {
            price: contract.swap_leg,
            normalized_price: 0.0,
            swap_leg: contract.swap_leg,
            operations: 0,
            values: None,
            policy: None,
        });
    }
    let n = contract.n;
    let windows: Vec<(usize, usize)> = (0..=n)
        .map(|k| admissible_volumes(k, contract))
        .collect::<Result<_>>()?;
    let disc = (-contract.rate * contract.delta).exp();

    // Terminal layer.
    let (lo_n, hi_n) = windows[n];
    let width_n = hi_n - lo_n + 1;
    let spots_n = tree.spot_values(spot, n);
    let mut next = vec![0.0; spots_n.len() * width_n];
    if contract.mode == Mode::Penalized {
        for (i, &x) in spots_n.iter().enumerate() {
            for l in 0..width_n {
                next[i * width_n + l] = contract.penalty(x, (lo_n + l) as f64);
            }
        }
    }
    let mut kept_values = options.keep_values.then(|| {
        vec![LayerValues {
            lo: lo_n,
            hi: hi_n,
            values: next.clone(),
        }]
    });
    let mut kept_policy = options.keep_policy.then(Vec::new);
    let mut operations = 0u64;

    for k in (0..n).rev() {
        let (lo, hi) = windows[k];
        let (nlo, nhi) = windows[k + 1];
        let width = hi - lo + 1;
        let nwidth = nhi - nlo + 1;
        let trans = &tree.transitions[k];
        let payoff: Vec<f64> = tree.spot_values(spot, k).iter().map(|s| s - contract.strike).collect();
        if trans.rows() != payoff.len() || trans.cols() * nwidth != next.len() {
            return Err(Error::MissingTransition(format!("transition {k} does not match its layers")));
        }
        operations += (trans.nnz() * nwidth) as u64;
        let mut current = vec![0.0; payoff.len() * width];
        let mut decisions = vec![0u8; payoff.len() * width];
        current
            .par_chunks_mut(width)
            .zip(decisions.par_chunks_mut(width))
            .enumerate()
            .for_each_init(
                || vec![0.0; nwidth],
                |cont, (i, (row_out, dec_out))| {
                    cont.iter_mut().for_each(|c| *c = 0.0);
                    let (cols, probs) = trans.row(i);
                    for (&j, &p) in cols.iter().zip(probs) {
                        let src = &next[j as usize * nwidth..(j as usize + 1) * nwidth];
                        for (c, v) in cont.iter_mut().zip(src) {
                            *c += p * v;
                        }
                    }
                    for l in 0..width {
                        let q = lo + l;
                        let stay = (q >= nlo && q <= nhi).then(|| disc * cont[q - nlo]);
                        let take = (q + 1 >= nlo && q < nhi).then(|| payoff[i] + disc * cont[q + 1 - nlo]);
                        let (v, d) = match (stay, take) {
                            (Some(s), Some(t)) if t > s => (t, 1),
                            (Some(s), _) => (s, 0),
                            (None, Some(t)) => (t, 1),
                            (None, None) => unreachable!("admissible windows are connected"),
                        };
                        row_out[l] = v;
                        dec_out[l] = d;
                    }
                },
            );
        if let Some(p) = kept_policy.as_mut() {
            p.push((lo, hi, decisions));
        }
        if let Some(v) = kept_values.as_mut() {
            v.push(LayerValues {
                lo,
                hi,
                values: current.clone(),
            });
        }
        next = current;
    }

    let (lo0, _) = windows[0];
    debug_assert_eq!(lo0, 0);
    let normalized_price = next[0];
    Ok(PricingResult {
        price: contract.reconstruct(normalized_price),
        normalized_price,
        swap_leg: contract.swap_leg,
        operations,
        values: kept_values.map(|mut v| {
            v.reverse();
            ValueSlice { layers: v }
        }),
        policy: kept_policy.map(|mut p| {
            p.reverse();
            PolicyTable { layers: p }
        }),
    })
}

/// Penalized-mode price; the contract's mode field is overridden.
pub fn price_penalized(
    tree: &QuantizationTree,
    spot: &SpotMap,
    contract: &NormalizedContract,
    options: PricingOptions,
) -> Result<PricingResult> {
    let c = NormalizedContract {
        mode: Mode::Penalized,
        ..contract.clone()
    };
    price(tree, spot, &c, options)
}

/// Firm-constraint price; the contract's mode field is overridden.
pub fn price_firm(
    tree: &QuantizationTree,
    spot: &SpotMap,
    contract: &NormalizedContract,
    options: PricingOptions,
) -> Result<PricingResult> {
    let c = NormalizedContract {
        mode: Mode::Firm,
        ..contract.clone()
    };
    price(tree, spot, &c, options)
}

/// Recomputes the maximizing decisions from stored values; ties go to `q = 0`.
pub fn extract_policy(
    tree: &QuantizationTree,
    spot: &SpotMap,
    contract: &NormalizedContract,
    values: &ValueSlice,
) -> Result<PolicyTable> {
    check_alignment(tree, spot, contract)?;
    let n = contract.n;
    if values.layers.len() != n + 1 {
        return Err(Error::invalid("value slice does not cover every date"));
    }
    let disc = (-contract.rate * contract.delta).exp();
    let mut layers = Vec::with_capacity(n);
    for k in 0..n {
        let cur = &values.layers[k];
        let next = &values.layers[k + 1];
        let trans = &tree.transitions[k];
        let spots = tree.spot_values(spot, k);
        let mut dec = vec![0u8; spots.len() * cur.width()];
        for (i, s) in spots.iter().enumerate() {
            let (cols, probs) = trans.row(i);
            let cont = |q: usize| -> Option<f64> {
                (q >= next.lo && q <= next.hi).then(|| {
                    cols.iter()
                        .zip(probs)
                        .map(|(&j, p)| p * next.get(j as usize, q).unwrap())
                        .sum::<f64>()
                })
            };
            for q in cur.lo..=cur.hi {
                let stay = cont(q).map(|c| disc * c);
                let take = cont(q + 1).map(|c| s - contract.strike + disc * c);
                dec[i * cur.width() + q - cur.lo] = match (stay, take) {
                    (Some(a), Some(b)) => u8::from(b > a),
                    (None, Some(_)) => 1,
                    _ => 0,
                };
            }
        }
        layers.push((cur.lo, cur.hi, dec));
    }
    Ok(PolicyTable { layers })
}
