//! Acceptance run: one PASS/FAIL line per criterion.
//!
//! Failures are reported, not raised, unless `SWINGQ_ACCEPTANCE_STRICT=1`.

#[allow(dead_code)]
#[path = "../../core/tests/common/oracles.rs"]
mod oracles;

use std::process::Command;
use std::time::Instant;

use oracles::{history_tree_price, refined_control_price, Instance};
use serde_json::Value;
use swingq::analytics::{call_strip_for, fit_convergence, premium_surface, simplex_lattice};
use swingq::contract::{Mode, NormalizedContract};
use swingq::lsmc::{ls_price, simulate_paths};
use swingq::models::{
    covariance_chain, one_factor_ar1, spot_map, two_factor_ar1, ArProcess, CovarianceChain, ForwardCurve, SpotMap,
};
use swingq::pricer::{price, PricingOptions};
use swingq::quantizer::{optimal_grid_1d, stationarity_residual_1d};
use swingq::tree::{
    base_grids, build_layers, build_spot_tree, build_tree, layer_sizes, prune, transitions_1d, transitions_is,
    transitions_mc, QuantizationTree, Schedule, TransitionEstimate, TransitionMethod, TreeConfig,
};

const DAY: f64 = 1.0 / 365.0;
const YEAR: usize = 364;
const STRIKES: [f64; 4] = [5.0, 10.0, 15.0, 20.0];
const STRIP_REFERENCE: [f64; 4] = [32760.0, 21844.0, 11381.0, 3966.0];
const WINDOW_REFERENCE: [f64; 4] = [29348.0, 19872.0, 10704.0, 2687.0];
const WINDOW_LS_CI: [(f64, f64); 4] = [(29068.0, 29758.0), (19318.0, 19993.0), (10265.0, 10892.0), (2482.0, 3038.0)];
const STRIP_2F: [f64; 4] = [2700.0, 1800.21, 924.46, 268.59];
const ZADOR_1D: f64 = 2.7207;

struct Model {
    process: ArProcess,
    chain: CovarianceChain,
    spot: SpotMap,
}

fn model(process: ArProcess) -> Model {
    let n = process.n_steps;
    let chain = covariance_chain(&process).unwrap();
    let spot = spot_map(&process, &chain, &ForwardCurve::flat(20.0, n).unwrap(), 0.0).unwrap();
    Model { process, chain, spot }
}

fn one_factor(n: usize) -> Model {
    model(one_factor_ar1(0.7, 4.0, DAY, n).unwrap())
}

fn two_factor(n: usize) -> Model {
    model(two_factor_ar1((0.36, 0.21), (1.11, 5.4), -0.11, DAY, n).unwrap())
}

fn tree_2d(m: &Model, points: usize, samples: usize) -> QuantizationTree {
    let mut cfg = TreeConfig::new(points);
    cfg.method = TransitionMethod::MonteCarlo;
    cfg.sample_count = samples;
    build_tree(&m.process, &m.chain, &cfg).unwrap()
}

/// Normalized contract for `q_max = 6`, bounds given in absolute volume.
fn contract(n: usize, strike: f64, volume: Option<(f64, f64)>, mode: Mode) -> NormalizedContract {
    let (lo, hi) = volume.map_or((0.0, n as f64), |(a, b)| (a / 6.0, b / 6.0));
    let mut c = NormalizedContract::new(n, DAY, strike, lo, hi, mode);
    c.scale = 6.0;
    c
}

fn value(tree: &QuantizationTree, m: &Model, c: &NormalizedContract) -> f64 {
    price(tree, &m.spot, c, PricingOptions::default()).unwrap().price
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn max_row_error(tree: &QuantizationTree) -> f64 {
    tree.transitions
        .iter()
        .flat_map(|t| (0..t.rows()).map(move |i| (t.row_sum(i) - 1.0).abs()))
        .fold(0.0, f64::max)
}

struct Report {
    lines: Vec<(String, bool)>,
}

impl Report {
    fn record(&mut self, name: &str, pass: bool, detail: String, started: Instant) {
        let tag = if pass { "PASS" } else { "FAIL" };
        println!("[{tag}] {name}: {detail} ({:.1}s)", started.elapsed().as_secs_f64());
        self.lines.push((name.to_string(), pass));
    }
}

fn fmt_list(v: &[f64], digits: usize) -> String {
    v.iter().map(|x| format!("{x:.digits$}")).collect::<Vec<_>>().join("/")
}

fn criterion_1_2_5(report: &mut Report, m: &Model, tree: &QuantizationTree) {
    let t = Instant::now();
    let strips: Vec<f64> = STRIKES.iter().map(|&k| call_strip_for(&m.spot, k, 6.0).unwrap()).collect();
    let prices: Vec<f64> = STRIKES.iter().map(|&k| value(tree, m, &contract(YEAR, k, None, Mode::Penalized))).collect();
    let tree_err = prices.iter().zip(&strips).map(|(p, s)| rel(*p, *s)).fold(0.0, f64::max);
    let cf_err = strips.iter().zip(&STRIP_REFERENCE).map(|(s, t)| rel(*s, *t)).fold(0.0, f64::max);
    report.record(
        "1 one-factor strip",
        tree_err < 5e-3 && cf_err < 1e-2,
        format!(
            "N=100 {} vs closed form {} (max rel {tree_err:.2e} < 5e-3); closed form vs printed max rel {cf_err:.2e} < 1e-2",
            fmt_list(&prices, 2),
            fmt_list(&strips, 2)
        ),
        t,
    );

    let t = Instant::now();
    let window = Some((1300.0, 1900.0));
    let pen: Vec<f64> = STRIKES.iter().map(|&k| value(tree, m, &contract(YEAR, k, window, Mode::Penalized))).collect();
    let paths = simulate_paths(&m.process, &m.spot, 20_000, 11).unwrap();
    let mut ok = true;
    let mut detail = Vec::new();
    for (i, &k) in STRIKES.iter().enumerate() {
        let r = rel(pen[i], WINDOW_REFERENCE[i]);
        let (lo, hi) = WINDOW_LS_CI[i];
        let ls = ls_price(&paths, &contract(YEAR, k, window, Mode::Penalized), 3).unwrap();
        let own = ls.ci_low <= pen[i] && pen[i] <= ls.ci_high;
        ok &= r < 2e-2 && lo <= pen[i] && pen[i] <= hi && own;
        detail.push(format!(
            "K={k}: {:.2} (rel {r:.1e}, printed CI [{lo},{hi}], own LS [{:.0},{:.0}])",
            pen[i], ls.ci_low, ls.ci_high
        ));
    }
    report.record("2 one-year window 1300-1900", ok, detail.join("; "), t);

    let t = Instant::now();
    let firm: Vec<f64> = STRIKES.iter().map(|&k| value(tree, m, &contract(YEAR, k, window, Mode::Firm))).collect();
    let diff = firm.iter().zip(&pen).map(|(f, p)| rel(*p, *f)).fold(0.0, f64::max);
    report.record(
        "5 firm vs penalized",
        diff < 1e-3,
        format!("firm {} penalized {} max rel {diff:.2e} < 1e-3", fmt_list(&firm, 2), fmt_list(&pen, 2)),
        t,
    );
}

fn criterion_3_4_2d(report: &mut Report) {
    let t = Instant::now();
    let n = 30;
    let m = two_factor(n);
    let sizes = [10usize, 20, 50, 100, 200];
    let reference = tree_2d(&m, 300, 1_000_000);
    let strips: Vec<f64> = STRIKES.iter().map(|&k| call_strip_for(&m.spot, k, 6.0).unwrap()).collect();
    let prices: Vec<f64> = STRIKES.iter().map(|&k| value(&reference, &m, &contract(n, k, None, Mode::Penalized))).collect();
    let err = prices.iter().zip(&STRIP_2F).map(|(p, s)| rel(*p, *s)).fold(0.0, f64::max);
    report.record(
        "3 two-factor strip N=300",
        err < 5e-3,
        format!(
            "{} vs printed {} (closed form here {}), max rel {err:.2e} < 5e-3",
            fmt_list(&prices, 2),
            fmt_list(&STRIP_2F, 2),
            fmt_list(&strips, 2)
        ),
        t,
    );

    let t = Instant::now();
    let cases = [(10.0, 80.0, 140.0), (20.0, 80.0, 140.0), (20.0, 30.0, 170.0), (20.0, 100.0, 120.0)];
    let trees: Vec<QuantizationTree> = sizes.iter().map(|&p| tree_2d(&m, p, 1_000_000)).collect();
    let mut alphas = Vec::new();
    for &(k, lo, hi) in &cases {
        let c = contract(n, k, Some((lo, hi)), Mode::Penalized);
        let ps: Vec<f64> = trees.iter().map(|tr| value(tr, &m, &c)).collect();
        let study = fit_convergence(&sizes, &ps, 300, value(&reference, &m, &c)).unwrap();
        alphas.push(study.alpha);
    }
    let ok = alphas.iter().all(|a| (0.6..=1.3).contains(a));
    report.record(
        "4b two-factor convergence",
        ok,
        format!("alpha {} for (K, Qmin-Qmax) {cases:?}, N_max=300, band [0.6, 1.3]", fmt_list(&alphas, 2)),
        t,
    );
}

fn criterion_4_1d(report: &mut Report, m: &Model) {
    let t = Instant::now();
    let sizes = [10usize, 20, 30, 50, 75, 100, 150, 200];
    let trees: Vec<QuantizationTree> = sizes
        .iter()
        .chain(&[400])
        .map(|&p| build_tree(&m.process, &m.chain, &TreeConfig::new(p)).unwrap())
        .collect();
    let cases = [(20.0, 1300.0, 1900.0), (10.0, 1300.0, 1900.0), (20.0, 1000.0, 2000.0), (20.0, 1600.0, 1800.0)];
    let mut alphas = Vec::new();
    for &(k, lo, hi) in &cases {
        let c = contract(YEAR, k, Some((lo, hi)), Mode::Penalized);
        let ps: Vec<f64> = trees.iter().map(|tr| value(tr, m, &c)).collect();
        let study = fit_convergence(&sizes, &ps[..sizes.len()], 400, ps[sizes.len()]).unwrap();
        alphas.push(study.alpha);
    }
    let ok = alphas.iter().all(|a| (1.7..=2.4).contains(a));
    report.record(
        "4a one-factor convergence",
        ok,
        format!("alpha {} for (K, Qmin-Qmax) {cases:?}, N_max=400, band [1.7, 2.4]", fmt_list(&alphas, 2)),
        t,
    );
}

fn small_one_factor(n: usize, points: usize) -> (Model, QuantizationTree) {
    let process = one_factor_ar1(0.7, 4.0, 1.0 / 12.0, n).unwrap();
    let m = model(process);
    let tree = build_tree(&m.process, &m.chain, &TreeConfig::new(points)).unwrap();
    (m, tree)
}

fn criterion_6(report: &mut Report) {
    let t = Instant::now();
    let mut worst: f64 = 0.0;
    let mut cases = 0;
    for n in [2usize, 4, 6] {
        for points in [2usize, 3] {
            let (m, tree) = small_one_factor(n, points);
            for strike in [17.0, 20.0, 23.0] {
                for lo in 0..=n {
                    for hi in lo..=n {
                        for mode in [Mode::Firm, Mode::Penalized] {
                            let c = NormalizedContract::new(n, 1.0 / 12.0, strike, lo as f64, hi as f64, mode);
                            let dp = price(&tree, &m.spot, &c, PricingOptions::default()).unwrap().normalized_price;
                            let inst = Instance::new(&tree, &m.spot, &c);
                            let refined = refined_control_price(&inst, 10).unwrap();
                            let history = history_tree_price(&inst).unwrap();
                            let scale = dp.abs().max(1.0);
                            worst = worst.max((dp - refined).abs() / scale).max((dp - history).abs() / scale);
                            cases += 1;
                        }
                    }
                }
            }
        }
    }
    report.record(
        "6 bang-bang oracle",
        worst <= 1e-12,
        format!("{cases} contracts with n<=6, N<=3; max rel gap to 1/10-control and history-tree prices {worst:.1e} <= 1e-12"),
        t,
    );
}

fn criterion_7(report: &mut Report) {
    let t = Instant::now();
    // Monotonicity and concavity on a one-month daily contract.
    let n = 30;
    let m = one_factor(n);
    let tree = build_tree(&m.process, &m.chain, &TreeConfig::new(50)).unwrap();
    let template = NormalizedContract::new(n, DAY, 20.0, 0.0, n as f64, Mode::Firm);
    let surface = premium_surface(&tree, &m.spot, &template, &simplex_lattice(n, 1)).unwrap();
    let p = |u: usize, v: usize| surface.get(u, v).unwrap();
    let tol = 1e-9 * p(0, n).abs().max(1.0);
    let mut monotone = true;
    let mut concave = true;
    for u in 0..=n {
        for v in u..=n {
            if v < n {
                monotone &= p(u, v + 1) >= p(u, v) - tol;
            }
            if u < v {
                monotone &= p(u + 1, v) <= p(u, v) + tol;
            }
            if u >= 1 && u < v {
                concave &= p(u - 1, v) - 2.0 * p(u, v) + p(u + 1, v) <= tol;
            }
            if v >= u + 1 && v < n {
                concave &= p(u, v - 1) - 2.0 * p(u, v) + p(u, v + 1) <= tol;
            }
            if u >= 1 && v < n {
                concave &= p(u - 1, v - 1) - 2.0 * p(u, v) + p(u + 1, v + 1) <= tol;
            }
        }
    }

    // Affinity on elementary triangles with [0, 1]-valued controls (1/10 lattice).
    let mut worst: f64 = 0.0;
    for (n, points) in [(6usize, 3usize), (8, 2)] {
        let (m, tree) = small_one_factor(n, points);
        let at = |u: f64, v: f64| {
            let c = NormalizedContract::new(n, 1.0 / 12.0, 20.0, u, v, Mode::Firm);
            refined_control_price(&Instance::new(&tree, &m.spot, &c), 10).unwrap()
        };
        for a in 0..n {
            for b in a..n {
                let (a_, b_) = (a as f64, b as f64);
                let p00 = at(a_, b_);
                let p01 = at(a_, b_ + 1.0);
                let p11 = at(a_ + 1.0, b_ + 1.0);
                // Upper triangle: vertices (a,b), (a,b+1), (a+1,b+1).
                for (du, dv) in [(0.3, 0.7), (0.1, 0.2), (0.5, 0.5)] {
                    let affine = p00 + dv * (p01 - p00) + du * (p11 - p01);
                    worst = worst.max((at(a_ + du, b_ + dv) - affine).abs() / p00.abs().max(1.0));
                }
                if b > a {
                    // Lower triangle: vertices (a,b), (a+1,b), (a+1,b+1).
                    let p10 = at(a_ + 1.0, b_);
                    for (du, dv) in [(0.7, 0.3), (0.4, 0.1)] {
                        let affine = p00 + du * (p10 - p00) + dv * (p11 - p10);
                        worst = worst.max((at(a_ + du, b_ + dv) - affine).abs() / p00.abs().max(1.0));
                    }
                }
            }
        }
    }
    report.record(
        "7 premium surface",
        monotone && concave && worst <= 1e-9,
        format!(
            "{} lattice points: monotone {monotone}, concave {concave}; max affine defect on triangles (n=6,8) {worst:.1e} <= 1e-9",
            surface.points.len()
        ),
        t,
    );
}

fn criterion_8(report: &mut Report) {
    let t = Instant::now();
    let mut resid: f64 = 0.0;
    let mut weight_err: f64 = 0.0;
    for n in [5usize, 10, 50, 100, 200, 400] {
        let g = optimal_grid_1d(n, 1e-12, 1000).unwrap();
        resid = resid.max(stationarity_residual_1d(g.points()));
        weight_err = weight_err.max((g.weights().iter().sum::<f64>() - 1.0).abs());
    }
    let g = optimal_grid_1d(200, 1e-12, 1000).unwrap();
    let zador = 200.0 * 200.0 * g.distortion();
    let zrel = rel(zador, ZADOR_1D);
    report.record(
        "8 quantizer",
        resid <= 1e-10 && zrel <= 0.05 && weight_err <= 1e-12,
        format!(
            "stationarity residual {resid:.1e} <= 1e-10; N^2 D at N=200 = {zador:.4} (rel {zrel:.2e} to {ZADOR_1D}); weight sum error {weight_err:.1e}"
        ),
        t,
    );
}

/// Fraction of entries whose difference exceeds three standard errors, over
/// entries with reference probability at least `1e-6`.
fn outside_3se(
    a: &TransitionEstimate,
    b: &TransitionEstimate,
    reference: &TransitionEstimate,
    row_draws: &dyn Fn(&TransitionEstimate, usize) -> Option<f64>,
) -> (usize, usize) {
    let m = &reference.matrix;
    let (mut out, mut total) = (0, 0);
    for i in 0..m.rows() {
        for j in 0..m.cols() {
            let p = m.get(i, j);
            if p < 1e-6 {
                continue;
            }
            let se_of = |e: &TransitionEstimate| {
                let s = e.std_error(i, j);
                if s > 0.0 {
                    s
                } else {
                    row_draws(e, i).map_or(0.0, |draws| (p * (1.0 - p) / draws).sqrt())
                }
            };
            let se = (se_of(a).powi(2) + se_of(b).powi(2)).sqrt();
            total += 1;
            if (a.matrix.get(i, j) - b.matrix.get(i, j)).abs() > 3.0 * se {
                out += 1;
            }
        }
    }
    (out, total)
}

/// Effective number of draws behind row `i`, recovered from a stored entry.
fn draws_from_row(e: &TransitionEstimate, i: usize) -> Option<f64> {
    let (cols, probs) = e.matrix.row(i);
    cols.iter().zip(probs).find_map(|(&j, &p)| {
        let s = e.std_error(i, j as usize);
        (s > 0.0 && p > 0.0 && p < 1.0).then(|| p * (1.0 - p) / (s * s))
    })
}

fn criterion_9(report: &mut Report, m_year: &Model, tree_year: &QuantizationTree) {
    let t = Instant::now();
    let n = 6;
    let m = one_factor(n);
    let sizes = layer_sizes(Schedule::Equal, n, 10);
    let zero = vec![false; n + 1];
    let layers = build_layers(&m.chain, &base_grids(1, &sizes, &zero, 0, 1).unwrap()).unwrap();
    let quad = optimal_grid_1d(2000, 1e-12, 1000).unwrap();
    let samples = 1_000_000;
    let (mut out, mut total) = (0, 0);
    let mut row_err: f64 = 0.0;
    for k in 1..n {
        let q = transitions_1d(&m.process, &layers, k, &quad).unwrap();
        let mc = transitions_mc(&m.process, &layers, k, samples, 7).unwrap();
        let is = transitions_is(&m.process, &layers, k, samples, 7).unwrap();
        for e in [&q, &mc, &is] {
            for i in 0..e.matrix.rows() {
                row_err = row_err.max((e.matrix.row_sum(i) - 1.0).abs());
            }
        }
        for (a, b) in [(&mc, &q), (&is, &q), (&mc, &is)] {
            let (o, tt) = outside_3se(a, b, &q, &draws_from_row);
            out += o;
            total += tt;
        }
    }
    let frac = out as f64 / total as f64;
    row_err = row_err.max(max_row_error(tree_year));

    let (pruned, stats) = prune(tree_year, 1e-5).unwrap();
    row_err = row_err.max(max_row_error(&pruned));
    let mut prune_diff: f64 = 0.0;
    for &k in &STRIKES {
        for window in [None, Some((1300.0, 1900.0))] {
            let c = contract(YEAR, k, window, Mode::Penalized);
            prune_diff = prune_diff.max(rel(value(&pruned, m_year, &c), value(tree_year, m_year, &c)));
        }
    }
    report.record(
        "9 transitions",
        frac <= 0.01 && row_err <= 1e-9 && prune_diff < 1e-3,
        format!(
            "N=10, 1e6 draws: {out}/{total} entry pairs beyond 3 SE ({:.2}%, normal rate 0.27%, limit 1%); max row-sum error {row_err:.1e}; pruning 1e-5 kept {}/{} entries, max price change {prune_diff:.1e} < 1e-3",
            100.0 * frac,
            stats.entries_after,
            stats.entries_before
        ),
        t,
    );
}

fn criterion_10(report: &mut Report) {
    let t = Instant::now();
    let m = two_factor(YEAR);
    let structure = tree_2d(&m, 100, 200_000);
    let spot_tree = build_spot_tree(&m.process, &m.chain, &TreeConfig::new(100)).unwrap();
    let window = Some((1300.0, 1900.0));
    let mut gaps = Vec::new();
    let mut detail = Vec::new();
    for &k in &STRIKES {
        let c = contract(YEAR, k, window, Mode::Penalized);
        let s = value(&structure, &m, &c);
        let d = value(&spot_tree, &m, &c);
        gaps.push(rel(d, s));
        detail.push(format!("K={k}: spot {d:.2} structure {s:.2}"));
    }
    let worst = gaps.iter().cloned().fold(0.0, f64::max);

    let sizes = [10usize, 20, 30, 50, 75, 100, 150, 200];
    let c = contract(YEAR, 20.0, window, Mode::Penalized);
    let ps: Vec<f64> = sizes
        .iter()
        .chain(&[400])
        .map(|&p| value(&build_spot_tree(&m.process, &m.chain, &TreeConfig::new(p)).unwrap(), &m, &c))
        .collect();
    let alpha = fit_convergence(&sizes, &ps[..sizes.len()], 400, ps[sizes.len()]).unwrap().alpha;
    report.record(
        "10 spot-direct",
        worst < 0.03 && (0.6..=1.4).contains(&alpha),
        format!(
            "{}; max rel gap {worst:.2e} < 3e-2 (N=100); spot-direct alpha {alpha:.2} (K=20, N_max=400), band [0.6, 1.4]",
            detail.join("; ")
        ),
        t,
    );
}

fn build_once(report: &mut Report) {
    let t = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("strip.cfg");
    let strikes: Vec<String> = (1..=10).map(|k| (2 * k).to_string()).collect();
    std::fs::write(
        &cfg,
        format!(
            "model.type=one_factor\nmodel.sigma=0.7\nmodel.alpha=4\nmodel.forward=20\ncontract.strike={}\ncontract.dates=364\ncontract.q_max=6\ncontract.volume_min=1300\ncontract.volume_max=1900\ntree.points=100\n",
            strikes.join(",")
        ),
    )
    .unwrap();
    let run = |extra: &[&str]| -> Value {
        let out = Command::new(env!("CARGO_BIN_EXE_swingq"))
            .arg("price")
            .arg("--config")
            .arg(&cfg)
            .arg("--out")
            .arg(dir.path().join("out"))
            .args(extra)
            .output()
            .unwrap();
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        serde_json::from_slice(&out.stdout).unwrap()
    };
    let fresh = run(&[]);
    let tree_path = dir.path().join("tree.swt");
    let tree_arg = tree_path.to_str().unwrap();
    let built = Command::new(env!("CARGO_BIN_EXE_swingq"))
        .args(["build-tree", "--config", cfg.to_str().unwrap(), "--tree", tree_arg, "--out"])
        .arg(dir.path().join("out"))
        .output()
        .unwrap();
    assert!(built.status.success());
    let reused = run(&["--tree", tree_arg]);
    let n_results = fresh["results"].as_array().map_or(0, Vec::len);
    let same_prices = fresh["results"] == reused["results"];
    let ok = fresh["tree_builds"] == 1 && reused["tree_builds"] == 0 && n_results == 10 && same_prices;
    report.record(
        "build once, price many",
        ok,
        format!(
            "{n_results} contracts: {} build ({:.2}s build, {:.2}s pricing); with a saved tree {} builds, identical prices {same_prices}",
            fresh["tree_builds"],
            fresh["tree_build_seconds"].as_f64().unwrap_or(f64::NAN),
            fresh["pricing_seconds"].as_f64().unwrap_or(f64::NAN),
            reused["tree_builds"]
        ),
        t,
    );
}

fn main() {
    let mut report = Report { lines: Vec::new() };
    let started = Instant::now();
    let year = one_factor(YEAR);
    let tree = build_tree(&year.process, &year.chain, &TreeConfig::new(100)).unwrap();
    criterion_1_2_5(&mut report, &year, &tree);
    criterion_3_4_2d(&mut report);
    criterion_4_1d(&mut report, &year);
    criterion_6(&mut report);
    criterion_7(&mut report);
    criterion_8(&mut report);
    criterion_9(&mut report, &year, &tree);
    criterion_10(&mut report);
    build_once(&mut report);

    let failed: Vec<&str> = report.lines.iter().filter(|l| !l.1).map(|l| l.0.as_str()).collect();
    println!(
        "acceptance: {}/{} passed in {:.0}s{}",
        report.lines.len() - failed.len(),
        report.lines.len(),
        started.elapsed().as_secs_f64(),
        if failed.is_empty() { String::new() } else { format!("; failing: {}", failed.join(", ")) }
    );
    if !failed.is_empty() && std::env::var("SWINGQ_ACCEPTANCE_STRICT").is_ok_and(|v| v == "1") {
        std::process::exit(1);
    }
}
