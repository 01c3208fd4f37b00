#![allow(dead_code)]
pub mod oracles;

use swingq::models::{covariance_chain, one_factor_ar1, spot_map, ForwardCurve, SpotMap};
use swingq::tree::{build_tree, QuantizationTree, TreeConfig};

/// One-factor tree with `points` per date on a monthly grid.
pub fn small_tree(n: usize, points: usize) -> (QuantizationTree, SpotMap) {
    let p = one_factor_ar1(0.7, 4.0, 1.0 / 12.0, n).unwrap();
    let chain = covariance_chain(&p).unwrap();
    let tree = build_tree(&p, &chain, &TreeConfig::new(points)).unwrap();
    let spot = spot_map(&p, &chain, &ForwardCurve::flat(20.0, n).unwrap(), 0.0).unwrap();
    (tree, spot)
}
