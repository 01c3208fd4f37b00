//! Command-line front end: configuration, tree reuse and the study commands.

pub mod config;
pub mod setup;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde_json::{json, Value};
use swingq::analytics::{
    call_strip_for, compare_report, convergence_rate, premium_surface, simplex_lattice,
};
use swingq::contract::{Mode, NormalizedContract};
use swingq::lsmc::{ls_price, ls_price_split, simulate_paths};
use swingq::pricer::{price, PricingOptions, PricingResult};
use swingq::tree::{build_spot_tree, build_tree, deserialize, serialize, QuantizationTree, TreeConfig, TreeMode};

pub use config::RawConfig;
pub use setup::{resolve, RunSetup};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Numerical(swingq::Error),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    /// Parameter validation failures count as configuration errors.
    pub fn from_validation(e: swingq::Error) -> Self {
        match e {
            swingq::Error::InvalidInput(_)
            | swingq::Error::InvalidCorrelation(_)
            | swingq::Error::Infeasible(_) => CliError::Config(e.to_string()),
            other => CliError::Numerical(other),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) | CliError::Io(_) => 3,
        }
    }
}

impl From<swingq::Error> for CliError {
    fn from(e: swingq::Error) -> Self {
        CliError::Numerical(e)
    }
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

#[derive(Debug, Parser)]
#[command(name = "swingq", version, about = "Swing option pricing on optimal quantization trees")]
pub struct Args {
    #[command(subcommand)]
    pub command: Command,
    /// Run configuration (flat `section.key=value` file).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Tree file: written by `build-tree`, reused by the pricing commands when present.
    #[arg(long, global = true)]
    pub tree: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory for CSV artifacts and the JSON summary.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_parser = ["firm", "penalized"])]
    pub mode: Option<String>,
    /// Quantize the spot exponent directly instead of the structure process.
    #[arg(long, global = true)]
    pub spot_direct: bool,
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Build a quantization tree and write it to disk.
    BuildTree,
    /// Price the contract for every configured strike on one tree.
    Price,
    /// Closed-form call strip against the unconstrained tree price.
    Strip,
    /// Premium over the lattice of global constraints.
    Surface,
    /// Error against a reference grid size and fitted rate.
    Convergence,
    /// Quantized prices against Longstaff-Schwartz intervals.
    CompareLs,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::BuildTree => "build-tree",
            Command::Price => "price",
            Command::Strip => "strip",
            Command::Surface => "surface",
            Command::Convergence => "convergence",
            Command::CompareLs => "compare-ls",
        }
    }
}

/// Result of one invocation: the JSON summary plus the files written.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub summary: Value,
    pub artifacts: Vec<PathBuf>,
}

struct Run {
    setup: RunSetup,
    raw: RawConfig,
    out: PathBuf,
    tree_path: Option<PathBuf>,
    tree_builds: usize,
    build_seconds: f64,
    load_seconds: f64,
    write_seconds: f64,
    artifacts: Vec<PathBuf>,
}

impl Run {
    fn write(&mut self, name: &str, contents: &str) -> Result<(), CliError> {
        std::fs::create_dir_all(&self.out).map_err(|e| io_err(&self.out, e))?;
        let path = self.out.join(name);
        std::fs::write(&path, contents).map_err(|e| io_err(&path, e))?;
        self.artifacts.push(path);
        Ok(())
    }

    fn build(&mut self, cfg: &TreeConfig) -> Result<QuantizationTree, CliError> {
        let t = Instant::now();
        let tree = if self.setup.spot_direct {
            build_spot_tree(&self.setup.process, &self.setup.chain, cfg)?
        } else {
            build_tree(&self.setup.process, &self.setup.chain, cfg)?
        };
        self.build_seconds += t.elapsed().as_secs_f64();
        self.tree_builds += 1;
        Ok(tree)
    }

    /// Loads the tree file when one exists, otherwise builds.
    fn tree(&mut self) -> Result<QuantizationTree, CliError> {
        if let Some(path) = self.tree_path.clone().filter(|p| p.exists()) {
            let t = Instant::now();
            let tree = deserialize(&path)?;
            self.load_seconds += t.elapsed().as_secs_f64();
            self.check_tree(&tree, &path)?;
            return Ok(tree);
        }
        let cfg = self.setup.tree.clone();
        self.build(&cfg)
    }

    fn check_tree(&self, tree: &QuantizationTree, path: &Path) -> Result<(), CliError> {
        let want_mode = if self.setup.spot_direct {
            TreeMode::SpotDirect
        } else {
            TreeMode::Structure
        };
        let problem = if tree.meta.model_hash != self.setup.tree.model_hash {
            Some("was built for a different model or date grid".to_string())
        } else if tree.mode != want_mode {
            Some(format!("is a {} tree, run asks for {want_mode}", tree.mode))
        } else if tree.n_steps() != self.setup.n_steps() {
            Some(format!("has {} steps, contract {}", tree.n_steps(), self.setup.n_steps()))
        } else {
            None
        };
        match problem {
            Some(p) => Err(CliError::Numerical(swingq::Error::Alignment(format!(
                "tree {} {p}",
                path.display()
            )))),
            None => Ok(()),
        }
    }

    fn price_one(&self, tree: &QuantizationTree, c: &NormalizedContract, opts: PricingOptions) -> Result<PricingResult, CliError> {
        Ok(price(tree, &self.setup.spot, c, opts)?)
    }

    fn base_summary(&self, command: Command) -> Value {
        json!({
            "command": command.name(),
            "model_hash": self.setup.tree.model_hash,
            "tree_mode": if self.setup.spot_direct { "spot-direct" } else { "structure" },
            "dates": self.setup.n_steps(),
            "mode": self.setup.contract.mode.to_string(),
        })
    }
}

/// Parses the config and applies command-line overrides.
pub fn prepare(args: &Args) -> Result<(RawConfig, RunSetup), CliError> {
    let path = args
        .config
        .as_ref()
        .ok_or_else(|| CliError::Config("`--config <path>` is required".into()))?;
    let mut raw = RawConfig::load(path)?;
    if let Some(seed) = args.seed {
        raw.set("tree.seed", seed.to_string());
        if !raw.contains("ls.seed") {
            raw.set("ls.seed", seed.to_string());
        }
    }
    if let Some(m) = &args.mode {
        raw.set("contract.mode", m.clone());
    }
    if args.spot_direct {
        raw.set("tree.spot_direct", "true");
    }
    let setup = resolve(&raw)?;
    Ok((raw, setup))
}

/// Executes one command.
pub fn run(args: &Args) -> Result<Outcome, CliError> {
    let (raw, setup) = prepare(args)?;
    if let Some(n) = args.threads.or(raw.get("run.threads")?) {
        // A pool that already exists (e.g. in tests) is kept.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let out = args
        .out
        .clone()
        .or_else(|| raw.path("run.out"))
        .unwrap_or_else(|| PathBuf::from("out"));
    let mut run = Run {
        setup,
        raw,
        out,
        tree_path: args.tree.clone(),
        tree_builds: 0,
        build_seconds: 0.0,
        load_seconds: 0.0,
        write_seconds: 0.0,
        artifacts: Vec::new(),
    };
    let command = args.command;
    let mut summary = run.base_summary(command);
    let t = Instant::now();
    let body = match command {
        Command::BuildTree => cmd_build_tree(&mut run)?,
        Command::Price => cmd_price(&mut run)?,
        Command::Strip => cmd_strip(&mut run)?,
        Command::Surface => cmd_surface(&mut run)?,
        Command::Convergence => cmd_convergence(&mut run)?,
        Command::CompareLs => cmd_compare_ls(&mut run)?,
    };
    let total = t.elapsed().as_secs_f64();
    let obj = summary.as_object_mut().unwrap();
    obj.extend(body.as_object().cloned().unwrap_or_default());
    obj.insert("tree_builds".into(), json!(run.tree_builds));
    obj.insert("tree_build_seconds".into(), json!(run.build_seconds));
    obj.insert("tree_load_seconds".into(), json!(run.load_seconds));
    obj.insert("tree_write_seconds".into(), json!(run.write_seconds));
    obj.insert(
        "pricing_seconds".into(),
        json!((total - run.build_seconds - run.load_seconds - run.write_seconds).max(0.0)),
    );
    let text = serde_json::to_string_pretty(&summary).expect("summary is valid JSON");
    run.write("summary.json", &text)?;
    Ok(Outcome {
        summary,
        artifacts: run.artifacts,
    })
}

fn cmd_build_tree(run: &mut Run) -> Result<Value, CliError> {
    let cfg = run.setup.tree.clone();
    let tree = run.build(&cfg)?;
    let path = run.tree_path.clone().unwrap_or_else(|| run.out.join("tree.swt"));
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    }
    let t = Instant::now();
    serialize(&tree, &path)?;
    run.write_seconds += t.elapsed().as_secs_f64();
    run.artifacts.push(path.clone());
    let max_row_error = tree
        .transitions
        .iter()
        .flat_map(|t| (0..t.rows()).map(move |i| (t.row_sum(i) - 1.0).abs()))
        .fold(0.0, f64::max);
    Ok(json!({
        "tree": path.display().to_string(),
        "layers": tree.layers.len(),
        "points": tree.layers.iter().map(|l| l.len()).max().unwrap_or(0),
        "transition_entries": tree.nnz(),
        "empty_rows": tree.empty_rows.len(),
        "max_row_sum_error": max_row_error,
    }))
}

fn cmd_price(run: &mut Run) -> Result<Value, CliError> {
    let tree = run.tree()?;
    let keep_values = run.raw.get_or("run.values", false)?;
    let mut rows = Vec::new();
    for &k in &run.setup.strikes.clone() {
        let c = run.setup.normalized(k)?;
        let r = run.price_one(&tree, &c, PricingOptions { keep_values, keep_policy: false })?;
        if let Some(values) = &r.values {
            let mut csv = String::from("k,i,volume,value\n");
            for (date, layer) in values.layers.iter().enumerate() {
                let width = layer.hi - layer.lo + 1;
                for (idx, v) in layer.values.iter().enumerate() {
                    writeln!(csv, "{date},{},{},{v:.10}", idx / width, layer.lo + idx % width).unwrap();
                }
            }
            run.write(&format!("values_K{k}.csv"), &csv)?;
        }
        rows.push(json!({
            "strike": k,
            "price": r.price,
            "normalized_price": r.normalized_price,
            "swap_leg": r.swap_leg,
            "operations": r.operations,
        }));
    }
    Ok(json!({ "results": rows }))
}

fn cmd_strip(run: &mut Run) -> Result<Value, CliError> {
    let tree = run.tree()?;
    let mut csv = String::from("K,closed_form,quantized,rel_error\n");
    let mut rows = Vec::new();
    let q_max = run.setup.contract.q_max;
    for &k in &run.setup.strikes.clone() {
        let strip = call_strip_for(&run.setup.spot, k, q_max)?;
        let mut c = run.setup.normalized(k)?;
        c.volume_min = 0.0;
        c.volume_max = c.n as f64;
        c.mode = Mode::Penalized;
        c.swap_leg = 0.0;
        c.scale = q_max;
        let r = run.price_one(&tree, &c, PricingOptions::default())?;
        let rel = r.price / strip - 1.0;
        writeln!(csv, "{k},{strip:.6},{:.6},{rel:.6e}", r.price).unwrap();
        rows.push(json!({ "strike": k, "closed_form": strip, "quantized": r.price, "rel_error": rel }));
    }
    run.write("strip.csv", &csv)?;
    Ok(json!({ "results": rows }))
}

fn cmd_surface(run: &mut Run) -> Result<Value, CliError> {
    let tree = run.tree()?;
    let step: usize = run.raw.get_or("surface.step", 1)?;
    let k = run.setup.strikes[0];
    let template = run.setup.normalized(k)?;
    let lattice = simplex_lattice(template.n, step);
    let surface = premium_surface(&tree, &run.setup.spot, &template, &lattice)?;
    run.write("surface.csv", &surface.to_csv())?;
    let infeasible = surface.points.iter().filter(|p| p.price.is_none()).count();
    Ok(json!({ "strike": k, "lattice_points": lattice.len(), "infeasible_points": infeasible }))
}

fn cmd_convergence(run: &mut Run) -> Result<Value, CliError> {
    let sizes: Vec<usize> = run.raw.list("convergence.sizes")?.unwrap_or_else(|| vec![10, 20, 50, 100, 200]);
    let reference: usize = run.raw.get_or("convergence.reference", 400)?;
    let explicit_grid_samples = run.raw.contains("tree.grid_samples");
    let explicit_quadrature = run.raw.contains("tree.quadrature_points");
    let k = run.setup.strikes[0];
    let c = run.setup.normalized(k)?;
    let base = run.setup.tree.clone();
    let setup = &run.setup;
    let t = Instant::now();
    let study = convergence_rate(
        |n| {
            let mut cfg = TreeConfig { points: n, ..base.clone() };
            let defaults = TreeConfig::new(n);
            if !explicit_grid_samples {
                cfg.grid_samples = defaults.grid_samples;
            }
            if !explicit_quadrature {
                cfg.quadrature_points = defaults.quadrature_points;
            }
            let tree = if setup.spot_direct {
                build_spot_tree(&setup.process, &setup.chain, &cfg)?
            } else {
                build_tree(&setup.process, &setup.chain, &cfg)?
            };
            Ok(price(&tree, &setup.spot, &c, PricingOptions::default())?.price)
        },
        &sizes,
        reference,
    )
    .map_err(|e| match e {
        swingq::Error::InvalidInput(_) => run.raw.config_error("convergence.sizes", e),
        other => CliError::Numerical(other),
    })?;
    // Builds and pricing are interleaved here; the elapsed time is booked as build time.
    run.build_seconds += t.elapsed().as_secs_f64();
    run.tree_builds += sizes.len() + 1;
    run.write("convergence.csv", &study.to_csv())?;
    Ok(json!({
        "strike": k,
        "sizes": study.sizes,
        "prices": study.prices,
        "reference_size": study.reference_size,
        "reference_price": study.reference_price,
        "alpha": study.alpha,
        "constant": study.constant,
        "residuals": study.residuals,
        "excluded": study.excluded,
    }))
}

fn cmd_compare_ls(run: &mut Run) -> Result<Value, CliError> {
    let tree = run.tree()?;
    let n_paths: usize = run.raw.get_or("ls.paths", 100_000)?;
    let eval_paths: usize = run.raw.get_or("ls.eval_paths", 0)?;
    let degree: usize = run.raw.get_or("ls.degree", 3)?;
    let seed: u64 = run.raw.get_or("ls.seed", 1)?;
    let paths = simulate_paths(&run.setup.process, &run.setup.spot, n_paths, seed).map_err(CliError::from_validation)?;
    let eval = if eval_paths > 0 {
        Some(simulate_paths(&run.setup.process, &run.setup.spot, eval_paths, seed ^ 0x5eed_0000)?)
    } else {
        None
    };
    let c0 = &run.setup.contract;
    let unconstrained = c0.q_min == 0.0
        && c0.volume_min == 0.0
        && c0.volume_max >= c0.n as f64 * c0.q_max;
    let mut quant = Vec::new();
    let mut ls = Vec::new();
    let mut strips = Vec::new();
    for &k in &run.setup.strikes.clone() {
        let c = run.setup.normalized(k)?;
        quant.push((k, run.price_one(&tree, &c, PricingOptions::default())?.price));
        let r = match &eval {
            Some(e) => ls_price_split(&paths, e, &c, degree)?,
            None => ls_price(&paths, &c, degree)?,
        };
        ls.push((k, r));
        if unconstrained {
            strips.push((k, call_strip_for(&run.setup.spot, k, c0.q_max)?));
        }
    }
    let report = compare_report(&quant, &ls, unconstrained.then_some(strips.as_slice()))?;
    run.write("compare.csv", &report.to_csv())?;
    eprint!("{}", report.to_table());
    let rows: Vec<Value> = report
        .rows
        .iter()
        .map(|r| {
            json!({
                "strike": r.strike,
                "quantized": r.quantized,
                "ls_price": r.ls.price,
                "ci_low": r.ls.ci_low,
                "ci_high": r.ls.ci_high,
                "closed_form": r.closed_form,
                "quantized_in_ci": r.quantized_in_ci(),
                "closed_form_in_ci": r.closed_form_in_ci(),
            })
        })
        .collect();
    Ok(json!({ "ls_paths": n_paths, "basis_degree": degree, "results": rows }))
}
