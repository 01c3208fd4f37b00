//! Closed-form strips, premium surfaces, convergence fits and comparison tables.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::contract::NormalizedContract;
use crate::error::{Error, Result};
use crate::lsmc::LsResult;
use crate::models::{ForwardCurve, SpotMap};
use crate::normal;
use crate::pricer::{price, PricingOptions};
use crate::tree::QuantizationTree;

/// Undiscounted `E (F e^{Y - v/2} - K)_+` for `Y ~ N(0, v)`.
pub fn black_call(forward: f64, strike: f64, variance: f64) -> f64 {
    if variance <= 0.0 {
        return (forward - strike).max(0.0);
    }
    let s = variance.sqrt();
    let d1 = ((forward / strike).ln() + 0.5 * variance) / s;
    forward * normal::cdf(d1) - strike * normal::cdf(d1 - s)
}

/// `q_max sum_{k<n} e^{-r t_k} Call(F_{0,t_k}, K, Lambda_k^2)` with `n = lambda2.len() - 1`.
pub fn call_strip(
    forward: &ForwardCurve,
    strike: f64,
    lambda2: &[f64],
    rate: f64,
    delta: f64,
    q_max: f64,
) -> Result<f64> {
    if !(strike > 0.0) {
        return Err(Error::invalid(format!("strike {strike} must be positive")));
    }
    if lambda2.is_empty() || forward.len() + 1 < lambda2.len() {
        return Err(Error::Alignment("forward curve shorter than the variance chain".into()));
    }
    if lambda2.iter().any(|v| *v < 0.0) {
        return Err(Error::invalid("negative variance"));
    }
    let n = lambda2.len() - 1;
    Ok(q_max
        * (0..n)
            .map(|k| (-rate * k as f64 * delta).exp() * black_call(forward.get(k), strike, lambda2[k]))
            .sum::<f64>())
}

/// Strip for the dates of a spot map.
pub fn call_strip_for(spot: &SpotMap, strike: f64, q_max: f64) -> Result<f64> {
    call_strip(&spot.forward, strike, &spot.lambda2, spot.rate, spot.delta, q_max)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SurfacePoint {
    pub volume_min: usize,
    pub volume_max: usize,
    /// `None` where the constraint pair is infeasible.
    pub price: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PremiumSurface {
    pub n: usize,
    pub points: Vec<SurfacePoint>,
}

impl PremiumSurface {
    pub fn get(&self, volume_min: usize, volume_max: usize) -> Option<f64> {
        self.points
            .iter()
            .find(|p| p.volume_min == volume_min && p.volume_max == volume_max)
            .and_then(|p| p.price)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("Qmin,Qmax,price\n");
        for p in &self.points {
            match p.price {
                Some(v) => writeln!(s, "{},{},{v:.10}", p.volume_min, p.volume_max),
                None => writeln!(s, "{},{},infeasible", p.volume_min, p.volume_max),
            }
            .unwrap();
        }
        s
    }
}

/// Integer pairs `0 <= u <= v <= n` on a lattice of the given step (the
/// endpoint `n` is always included).
pub fn simplex_lattice(n: usize, step: usize) -> Vec<(usize, usize)> {
    let step = step.max(1);
    let mut axis: Vec<usize> = (0..=n).step_by(step).collect();
    if *axis.last().unwrap() != n {
        axis.push(n);
    }
    let mut out = Vec::new();
    for &u in &axis {
        for &v in &axis {
            if u <= v {
                out.push((u, v));
            }
        }
    }
    out
}

/// One price per lattice point on a shared tree.
pub fn premium_surface(
    tree: &QuantizationTree,
    spot: &SpotMap,
    template: &NormalizedContract,
    lattice: &[(usize, usize)],
) -> Result<PremiumSurface> {
    if let Some(&(u, v)) = lattice.iter().find(|(u, v)| u > v || *v > template.n) {
        return Err(Error::invalid(format!("pair ({u}, {v}) is outside the simplex")));
    }
    let points = lattice
        .par_iter()
        .map(|&(u, v)| {
            let c = NormalizedContract {
                volume_min: u as f64,
                volume_max: v as f64,
                ..template.clone()
            };
            let price = match price(tree, spot, &c, PricingOptions::default()) {
                Ok(r) => Some(r.price),
                Err(Error::Infeasible(_)) => None,
                Err(e) => return Err(e),
            };
            Ok(SurfacePoint {
                volume_min: u,
                volume_max: v,
                price,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PremiumSurface { n: template.n, points })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceStudy {
    pub sizes: Vec<usize>,
    pub prices: Vec<f64>,
    pub reference_size: usize,
    pub reference_price: f64,
    /// Fitted `error ~ C / N^alpha`.
    pub alpha: f64,
    pub constant: f64,
    /// Log-scale residuals of the points used in the fit.
    pub residuals: Vec<f64>,
    /// Sizes dropped because their error was exactly zero.
    pub excluded: Vec<usize>,
}

impl ConvergenceStudy {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("N,price,abs_error\n");
        for (n, p) in self.sizes.iter().zip(&self.prices) {
            writeln!(s, "{n},{p:.10},{:.10e}", (p - self.reference_price).abs()).unwrap();
        }
        writeln!(s, "{},{:.10},0", self.reference_size, self.reference_price).unwrap();
        s
    }
}

/// Least-squares fit of `log |P(N) - P_ref|` on `log N`.
pub fn fit_convergence(
    sizes: &[usize],
    prices: &[f64],
    reference_size: usize,
    reference_price: f64,
) -> Result<ConvergenceStudy> {
    if sizes.len() != prices.len() {
        return Err(Error::Alignment("one price per grid size is required".into()));
    }
    if sizes.windows(2).any(|w| w[0] >= w[1]) || sizes.last().is_some_and(|&n| n >= reference_size) {
        return Err(Error::invalid("grid sizes must increase and stay below the reference"));
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut excluded = Vec::new();
    for (&n, &p) in sizes.iter().zip(prices) {
        let e = (p - reference_price).abs();
        if e == 0.0 {
            excluded.push(n);
        } else {
            xs.push((n as f64).ln());
            ys.push(e.ln());
        }
    }
    if xs.len() < 2 {
        return Err(Error::invalid("need at least two nonzero errors to fit a rate"));
    }
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residuals = xs.iter().zip(&ys).map(|(x, y)| y - (intercept + slope * x)).collect();
    Ok(ConvergenceStudy {
        sizes: sizes.to_vec(),
        prices: prices.to_vec(),
        reference_size,
        reference_price,
        alpha: -slope,
        constant: intercept.exp(),
        residuals,
        excluded,
    })
}

/// Prices at each size and at the reference, then fits the rate.
pub fn convergence_rate<F>(price_at: F, sizes: &[usize], reference_size: usize) -> Result<ConvergenceStudy>
where
    F: Fn(usize) -> Result<f64> + Sync,
{
    let mut all: Vec<usize> = sizes.to_vec();
    all.push(reference_size);
    let prices = all.par_iter().map(|&n| price_at(n)).collect::<Result<Vec<_>>>()?;
    fit_convergence(sizes, &prices[..sizes.len()], reference_size, prices[sizes.len()])
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareRow {
    pub strike: f64,
    pub quantized: f64,
    pub ls: LsResult,
    pub closed_form: Option<f64>,
}

impl CompareRow {
    pub fn quantized_in_ci(&self) -> bool {
        self.ls.ci_low <= self.quantized && self.quantized <= self.ls.ci_high
    }

    pub fn closed_form_in_ci(&self) -> Option<bool> {
        self.closed_form.map(|c| self.ls.ci_low <= c && c <= self.ls.ci_high)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareReport {
    pub rows: Vec<CompareRow>,
}

/// Lines up per-strike results; every input must list the same strikes.
pub fn compare_report(
    quantized: &[(f64, f64)],
    ls: &[(f64, LsResult)],
    closed_form: Option<&[(f64, f64)]>,
) -> Result<CompareReport> {
    let strikes: Vec<f64> = quantized.iter().map(|r| r.0).collect();
    let same = |other: &mut dyn Iterator<Item = f64>| other.eq(strikes.iter().copied());
    if !same(&mut ls.iter().map(|r| r.0)) || closed_form.is_some_and(|c| !same(&mut c.iter().map(|r| r.0))) {
        return Err(Error::Alignment("strike lists differ between methods".into()));
    }
    let rows = quantized
        .iter()
        .zip(ls)
        .enumerate()
        .map(|(i, (&(strike, q), (_, l)))| CompareRow {
            strike,
            quantized: q,
            ls: l.clone(),
            closed_form: closed_form.map(|c| c[i].1),
        })
        .collect();
    Ok(CompareReport { rows })
}

impl CompareReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("K,quantized,ls_price,ci_low,ci_high,n_paths,closed_form,quantized_in_ci,closed_form_in_ci\n");
        for r in &self.rows {
            let cf = r.closed_form.map_or(String::new(), |c| format!("{c:.6}"));
            let cf_in = r.closed_form_in_ci().map_or(String::new(), |b| b.to_string());
            writeln!(
                s,
                "{},{:.6},{:.6},{:.6},{:.6},{},{cf},{},{cf_in}",
                r.strike,
                r.quantized,
                r.ls.price,
                r.ls.ci_low,
                r.ls.ci_high,
                r.ls.n_paths,
                r.quantized_in_ci()
            )
            .unwrap();
        }
        s
    }

    pub fn to_table(&self) -> String {
        let mut s = format!(
            "{:>6} {:>12} {:>12} {:>26} {:>8}\n",
            "K", "quantized", "closed form", "LS 95% interval", "in CI"
        );
        for r in &self.rows {
            let cf = r.closed_form.map_or("-".to_string(), |c| format!("{c:.2}"));
            writeln!(
                s,
                "{:>6} {:>12.2} {:>12} {:>26} {:>8}",
                r.strike,
                r.quantized,
                cf,
                format!("[{:.2}, {:.2}]", r.ls.ci_low, r.ls.ci_high),
                r.quantized_in_ci()
            )
            .unwrap();
        }
        s
    }
}
