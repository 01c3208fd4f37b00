//! Brute-force reference pricers used to check the tree dynamic programming.
#![allow(dead_code)]

use swingq::contract::{Mode, NormalizedContract};
use swingq::models::SpotMap;
use swingq::tree::QuantizationTree;

pub struct Instance<'a> {
    pub tree: &'a QuantizationTree,
    pub spots: Vec<Vec<f64>>,
    pub contract: &'a NormalizedContract,
    pub disc: f64,
}

impl<'a> Instance<'a> {
    pub fn new(tree: &'a QuantizationTree, spot: &SpotMap, contract: &'a NormalizedContract) -> Self {
        let spots = (0..=contract.n).map(|k| tree.spot_values(spot, k)).collect();
        Self {
            tree,
            spots,
            contract,
            disc: (-contract.rate * contract.delta).exp(),
        }
    }

    fn terminal(&self, i: usize, volume: f64) -> Option<f64> {
        let c = self.contract;
        match c.mode {
            Mode::Penalized => Some(c.penalty(self.spots[c.n][i], volume)),
            Mode::Firm => {
                let ok = volume >= c.volume_min - 1e-9 && volume <= c.volume_max + 1e-9;
                ok.then_some(0.0)
            }
        }
    }

    fn children(&self, k: usize, i: usize) -> Vec<(usize, f64)> {
        let t = &self.tree.transitions[k];
        (0..t.cols()).map(|j| (j, t.get(i, j))).filter(|e| e.1 > 0.0).collect()
    }
}

/// Backward induction over the full history tree with controls in `{0, 1}`.
pub fn history_tree_price(inst: &Instance) -> Option<f64> {
    fn go(inst: &Instance, k: usize, i: usize, volume: usize) -> Option<f64> {
        if k == inst.contract.n {
            return inst.terminal(i, volume as f64);
        }
        let mut best: Option<f64> = None;
        for q in 0..=1usize {
            let mut cont = 0.0;
            let mut feasible = true;
            for (j, p) in inst.children(k, i) {
                match go(inst, k + 1, j, volume + q) {
                    Some(v) => cont += p * v,
                    None => feasible = false,
                }
            }
            if feasible {
                let v = q as f64 * (inst.spots[k][i] - inst.contract.strike) + inst.disc * cont;
                best = Some(best.map_or(v, |b: f64| b.max(v)));
            }
        }
        best
    }
    go(inst, 0, 0, 0)
}

/// Enumerates every adapted `{0, 1}` strategy on the history tree and returns
/// the best expected payoff. Only usable for a handful of decision nodes.
pub fn enumerate_strategies(inst: &Instance) -> Option<f64> {
    // Decision nodes in depth-first order, each identified by its path.
    let n = inst.contract.n;
    let mut nodes: Vec<Vec<usize>> = Vec::new();
    fn collect(inst: &Instance, path: &mut Vec<usize>, nodes: &mut Vec<Vec<usize>>) {
        let k = path.len() - 1;
        if k == inst.contract.n {
            return;
        }
        nodes.push(path.clone());
        for (j, _) in inst.children(k, *path.last().unwrap()) {
            path.push(j);
            collect(inst, path, nodes);
            path.pop();
        }
    }
    collect(inst, &mut vec![0], &mut nodes);
    assert!(nodes.len() <= 20, "too many decision nodes: {}", nodes.len());
    let index: std::collections::HashMap<Vec<usize>, usize> =
        nodes.iter().enumerate().map(|(i, p)| (p.clone(), i)).collect();

    let mut best: Option<f64> = None;
    for strategy in 0u32..(1 << nodes.len()) {
        // Expected value along all paths; None if some path ends outside the window.
        fn walk(inst: &Instance, idx: &std::collections::HashMap<Vec<usize>, usize>, s: u32, path: &mut Vec<usize>, volume: usize, n: usize) -> Option<f64> {
            let k = path.len() - 1;
            let i = *path.last().unwrap();
            if k == n {
                return inst.terminal(i, volume as f64);
            }
            let q = ((s >> idx[path.as_slice()]) & 1) as usize;
            let mut total = q as f64 * (inst.spots[k][i] - inst.contract.strike);
            for (j, p) in inst.children(k, i) {
                path.push(j);
                let v = walk(inst, idx, s, path, volume + q, n);
                path.pop();
                total += inst.disc * p * v?;
            }
            Some(total)
        }
        if let Some(v) = walk(inst, &index, strategy, &mut vec![0], 0, n) {
            best = Some(best.map_or(v, |b: f64| b.max(v)));
        }
    }
    best
}

/// Markov dynamic programming with controls `{0, 1/m, ..., 1}` and volumes on
/// the matching `1/m` lattice.
pub fn refined_control_price(inst: &Instance, m: usize) -> Option<f64> {
    let n = inst.contract.n;
    let sizes: Vec<usize> = inst.spots.iter().map(Vec::len).collect();
    let mut next: Vec<Vec<Option<f64>>> = (0..sizes[n])
        .map(|i| (0..=m * n).map(|v| inst.terminal(i, v as f64 / m as f64)).collect())
        .collect();
    for k in (0..n).rev() {
        let mut cur = vec![vec![None; m * k + 1]; sizes[k]];
        for i in 0..sizes[k] {
            let children = inst.children(k, i);
            for v in 0..=m * k {
                let mut best: Option<f64> = None;
                for c in 0..=m {
                    let mut cont = 0.0;
                    let mut feasible = true;
                    for &(j, p) in &children {
                        match next[j][v + c] {
                            Some(x) => cont += p * x,
                            None => feasible = false,
                        }
                    }
                    if feasible {
                        let val = c as f64 / m as f64 * (inst.spots[k][i] - inst.contract.strike) + inst.disc * cont;
                        best = Some(best.map_or(val, |b: f64| b.max(val)));
                    }
                }
                cur[i][v] = best;
            }
        }
        next = cur;
    }
    next[0][0]
}
