mod common;

use std::sync::OnceLock;

use common::small_tree;
use proptest::prelude::*;
use swingq::contract::{Mode, NormalizedContract};
use swingq::models::SpotMap;
use swingq::pricer::{price, PricingOptions};
use swingq::quantizer::{optimal_grid_1d, stationarity_residual_1d};
use swingq::tree::QuantizationTree;

const N: usize = 8;

fn tree() -> &'static (QuantizationTree, SpotMap) {
    static TREE: OnceLock<(QuantizationTree, SpotMap)> = OnceLock::new();
    TREE.get_or_init(|| small_tree(N, 6))
}

/// `None` when a firm window holds no integer volume.
fn try_value(strike: f64, lo: f64, hi: f64, mode: Mode) -> Option<f64> {
    let (tree, spot) = tree();
    let c = NormalizedContract::new(N, 1.0 / 12.0, strike, lo, hi, mode);
    match price(tree, spot, &c, PricingOptions::default()) {
        Ok(p) => Some(p.normalized_price),
        Err(swingq::Error::Infeasible(_)) => None,
        Err(e) => panic!("{e}"),
    }
}

fn value(strike: f64, lo: f64, hi: f64, mode: Mode) -> f64 {
    try_value(strike, lo, hi, mode).unwrap()
}

fn tol(a: f64) -> f64 {
    1e-10 * a.abs().max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn price_decreases_in_strike(k in 5.0f64..35.0, dk in 0.0f64..5.0, lo in 0.0f64..4.0, width in 0.0f64..4.0,
                                 firm in any::<bool>()) {
        let mode = if firm { Mode::Firm } else { Mode::Penalized };
        let hi = (lo + width).min(N as f64);
        let Some(a) = try_value(k, lo, hi, mode) else { return Ok(()) };
        let b = value(k + dk, lo, hi, mode);
        prop_assert!(b <= a + tol(a), "{a} {b}");
    }

    #[test]
    fn wider_window_is_worth_more(k in 10.0f64..30.0, lo in 0.0f64..4.0, hi in 4.0f64..6.0, extra in 0.0f64..2.0,
                                  firm in any::<bool>()) {
        let mode = if firm { Mode::Firm } else { Mode::Penalized };
        let Some(base) = try_value(k, lo, hi, mode) else { return Ok(()) };
        prop_assert!(value(k, lo, hi + extra, mode) >= base - tol(base));
        prop_assert!(value(k, (lo - extra).max(0.0), hi, mode) >= base - tol(base));
    }

    #[test]
    fn penalized_dominates_firm(k in 5.0f64..35.0, lo in 0.0f64..5.0, width in 0.0f64..3.0) {
        let hi = (lo + width).min(N as f64);
        let Some(firm) = try_value(k, lo, hi, Mode::Firm) else { return Ok(()) };
        let pen = value(k, lo, hi, Mode::Penalized);
        prop_assert!(pen >= firm - tol(firm), "{pen} < {firm}");
    }

    #[test]
    fn unconstrained_price_is_nonnegative(k in 0.0f64..60.0) {
        prop_assert!(value(k, 0.0, N as f64, Mode::Firm) >= -1e-12);
    }

    #[test]
    fn quantizer_grids_are_symmetric_and_normalized(n in 1usize..40) {
        let g = optimal_grid_1d(n, 1e-12, 1000).unwrap();
        let x = g.points();
        prop_assert!(x.windows(2).all(|w| w[0] < w[1]));
        prop_assert!((g.weights().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        for i in 0..n {
            prop_assert!((x[i] + x[n - 1 - i]).abs() < 1e-9);
        }
        prop_assert!(stationarity_residual_1d(x) < 1e-10);
    }
}

#[test]
fn transition_rows_are_stochastic() {
    let (tree, _) = tree();
    for t in &tree.transitions {
        for i in 0..t.rows() {
            assert!((t.row_sum(i) - 1.0).abs() < 1e-9);
            let (_, probs) = t.row(i);
            assert!(probs.iter().all(|&p| p >= 0.0));
        }
    }
}
