mod common;

use common::oracles::{enumerate_strategies, history_tree_price, refined_control_price, Instance};
use common::small_tree;
use swingq::contract::{Mode, NormalizedContract};
use swingq::pricer::{price, PricingOptions};

fn contract(n: usize, strike: f64, lo: f64, hi: f64, mode: Mode) -> NormalizedContract {
    NormalizedContract::new(n, 1.0 / 12.0, strike, lo, hi, mode)
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0)
}

#[test]
fn matches_strategy_enumeration_on_three_dates() {
    let (tree, spot) = small_tree(3, 2);
    for mode in [Mode::Firm, Mode::Penalized] {
        for strike in [17.0, 20.0, 23.0] {
            for lo in 0..=3 {
                for hi in lo..=3 {
                    let c = contract(3, strike, lo as f64, hi as f64, mode);
                    let inst = Instance::new(&tree, &spot, &c);
                    let dp = price(&tree, &spot, &c, PricingOptions::default()).unwrap().normalized_price;
                    let brute = enumerate_strategies(&inst).unwrap();
                    assert!(close(dp, brute), "{mode} K={strike} [{lo},{hi}]: {dp} vs {brute}");
                    assert!(close(dp, history_tree_price(&inst).unwrap()));
                }
            }
        }
    }
}

#[test]
fn bang_bang_controls_suffice() {
    for n in [2usize, 4, 6] {
        for points in [2usize, 3] {
            let (tree, spot) = small_tree(n, points);
            for mode in [Mode::Firm, Mode::Penalized] {
                for lo in 0..=n {
                    for hi in lo..=n {
                        let c = contract(n, 20.0, lo as f64, hi as f64, mode);
                        let inst = Instance::new(&tree, &spot, &c);
                        let dp = price(&tree, &spot, &c, PricingOptions::default()).unwrap().normalized_price;
                        let refined = refined_control_price(&inst, 10).unwrap();
                        assert!(close(dp, refined), "n={n} N={points} {mode} [{lo},{hi}]: {dp} vs {refined}");
                        let history = history_tree_price(&inst).unwrap();
                        assert!(close(dp, history), "n={n} N={points} {mode} [{lo},{hi}]");
                    }
                }
            }
        }
    }
}
