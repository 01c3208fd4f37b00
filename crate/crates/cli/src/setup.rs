//! Turns a raw configuration into model, contract and tree settings.

use nalgebra::DMatrix;
use swingq::contract::{normalize, Mode, NormalizedContract, SwingContract, DEFAULT_PENALTY};
use swingq::models::{
    covariance_chain, read_forward_curve, spot_map, ArProcess, CovarianceChain, FactorSpec, ForwardCurve,
    ModelSpec, SpotMap,
};
use swingq::tree::{model_hash, Schedule, TransitionMethod, TreeConfig};

use crate::config::RawConfig;
use crate::CliError;

/// Everything a subcommand needs, resolved and validated.
#[derive(Debug, Clone)]
pub struct RunSetup {
    pub model: ModelSpec,
    pub process: ArProcess,
    pub chain: CovarianceChain,
    pub forward: ForwardCurve,
    pub spot: SpotMap,
    /// Contract with the first strike; see `strikes`.
    pub contract: SwingContract,
    pub strikes: Vec<f64>,
    pub tree: TreeConfig,
    pub spot_direct: bool,
}

impl RunSetup {
    pub fn n_steps(&self) -> usize {
        self.contract.n
    }

    pub fn delta(&self) -> f64 {
        self.contract.delta()
    }

    pub fn contract_for(&self, strike: f64) -> SwingContract {
        SwingContract {
            strike,
            ..self.contract.clone()
        }
    }

    pub fn normalized(&self, strike: f64) -> Result<NormalizedContract, CliError> {
        normalize(&self.contract_for(strike), &self.forward).map_err(CliError::from_validation)
    }
}

fn model_spec(cfg: &RawConfig) -> Result<ModelSpec, CliError> {
    let kind: String = cfg.require("model.type")?;
    match kind.as_str() {
        "one_factor" => Ok(ModelSpec::OneFactor {
            sigma: cfg.require("model.sigma")?,
            alpha: cfg.require("model.alpha")?,
        }),
        "two_factor" => Ok(ModelSpec::TwoFactor {
            sigma1: cfg.require("model.sigma1")?,
            alpha1: cfg.require("model.alpha1")?,
            sigma2: cfg.require("model.sigma2")?,
            alpha2: cfg.require("model.alpha2")?,
            rho: cfg.require("model.rho")?,
        }),
        "polyfactor" => {
            let idx = cfg.factor_indices();
            if idx.is_empty() {
                return Err(CliError::Config("polyfactor model needs `model.factor<i>.alpha` keys".into()));
            }
            let mut factors = Vec::new();
            for i in &idx {
                let alpha: f64 = cfg.require(&format!("model.factor{i}.alpha"))?;
                let key = format!("model.factor{i}.poly");
                let poly: Vec<f64> = cfg
                    .list(&key)?
                    .ok_or_else(|| CliError::Config(format!("missing required key `{key}`")))?;
                factors.push(FactorSpec::new(alpha, poly).map_err(|e| cfg.config_error(&key, e))?);
            }
            let m = factors.len();
            let correlation = match cfg.raw("model.correlation") {
                None => DMatrix::identity(m, m),
                Some(text) => {
                    let values: Vec<f64> = text
                        .split([';', ','])
                        .map(|v| v.trim().parse::<f64>())
                        .collect::<Result<_, _>>()
                        .map_err(|e| cfg.config_error("model.correlation", e))?;
                    if values.len() != m * m {
                        return Err(cfg.config_error(
                            "model.correlation",
                            format!("expected {m}x{m} entries, got {}", values.len()),
                        ));
                    }
                    DMatrix::from_row_slice(m, m, &values)
                }
            };
            Ok(ModelSpec::PolyFactor { factors, correlation })
        }
        other => Err(cfg.config_error(
            "model.type",
            format!("unknown model `{other}` (one_factor, two_factor, polyfactor)"),
        )),
    }
}

fn forward_curve(cfg: &RawConfig, n: usize) -> Result<ForwardCurve, CliError> {
    match (cfg.path("model.forward_curve"), cfg.get::<f64>("model.forward")?) {
        (Some(_), Some(_)) => Err(CliError::Config(
            "set only one of `model.forward` and `model.forward_curve`".into(),
        )),
        (Some(path), None) => {
            let file = std::fs::File::open(&path)
                .map_err(|e| cfg.config_error("model.forward_curve", format!("{}: {e}", path.display())))?;
            let curve = read_forward_curve(std::io::BufReader::new(file))
                .map_err(|e| cfg.config_error("model.forward_curve", e))?;
            if curve.len() != n + 1 {
                return Err(cfg.config_error(
                    "model.forward_curve",
                    format!("curve has {} dates, contract needs {}", curve.len(), n + 1),
                ));
            }
            Ok(curve)
        }
        (None, Some(f)) => ForwardCurve::flat(f, n).map_err(|e| cfg.config_error("model.forward", e)),
        (None, None) => Err(CliError::Config("missing `model.forward` or `model.forward_curve`".into())),
    }
}

fn contract(cfg: &RawConfig, strike: f64) -> Result<SwingContract, CliError> {
    let n: usize = cfg.require("contract.dates")?;
    let delta: f64 = cfg.get_or("contract.delta", 1.0 / 365.0)?;
    if !(delta > 0.0) {
        return Err(cfg.config_error("contract.delta", "must be positive"));
    }
    let q_max: f64 = cfg.require("contract.q_max")?;
    let mode: Mode = cfg.get_or("contract.mode", Mode::Penalized)?;
    let c = SwingContract {
        n,
        maturity: n as f64 * delta,
        strike,
        rate: cfg.get_or("contract.rate", 0.0)?,
        q_min: cfg.get_or("contract.q_min", 0.0)?,
        q_max,
        volume_min: cfg.get_or("contract.volume_min", 0.0)?,
        volume_max: cfg.get_or("contract.volume_max", n as f64 * q_max)?,
        mode,
        penalty_a: cfg.get_or("contract.penalty_a", DEFAULT_PENALTY)?,
        penalty_b: cfg.get_or("contract.penalty_b", DEFAULT_PENALTY)?,
    };
    c.validate().map_err(CliError::from_validation)?;
    Ok(c)
}

fn tree_config(cfg: &RawConfig, dim: usize) -> Result<TreeConfig, CliError> {
    let points: usize = cfg.require("tree.points")?;
    if points == 0 {
        return Err(cfg.config_error("tree.points", "must be at least 1"));
    }
    let mut t = TreeConfig::new(points);
    t.schedule = cfg.get_or("tree.schedule", Schedule::Equal)?;
    let default_method = if dim == 1 {
        TransitionMethod::Quadrature
    } else {
        TransitionMethod::MonteCarlo
    };
    t.method = cfg.get_or("tree.method", default_method)?;
    t.sample_count = cfg.get_or("tree.samples", t.sample_count)?;
    t.quadrature_points = cfg.get_or("tree.quadrature_points", t.quadrature_points)?;
    t.grid_samples = cfg.get_or("tree.grid_samples", t.grid_samples)?;
    t.prune_threshold = cfg.get_or("tree.prune", 0.0)?;
    if !(0.0..1.0).contains(&t.prune_threshold) {
        return Err(cfg.config_error("tree.prune", "must lie in [0, 1)"));
    }
    t.seed = cfg.get_or("tree.seed", 1)?;
    Ok(t)
}

/// Resolves and validates a configuration.
pub fn resolve(cfg: &RawConfig) -> Result<RunSetup, CliError> {
    let model = model_spec(cfg)?;
    let strikes: Vec<f64> = cfg
        .list("contract.strike")?
        .ok_or_else(|| CliError::Config("missing required key `contract.strike`".into()))?;
    if strikes.is_empty() {
        return Err(cfg.config_error("contract.strike", "needs at least one strike"));
    }
    let contract = contract(cfg, strikes[0])?;
    let (n, delta) = (contract.n, contract.delta());
    let forward = forward_curve(cfg, n)?;
    let process = model.process(delta, n).map_err(CliError::from_validation)?;
    let chain = covariance_chain(&process).map_err(CliError::Numerical)?;
    let spot = spot_map(&process, &chain, &forward, contract.rate).map_err(CliError::from_validation)?;
    let mut tree = tree_config(cfg, process.state_dimension())?;
    tree.model_hash = model_hash(&model.describe(delta, n));
    let spot_direct = cfg.get_or("tree.spot_direct", false)?;
    Ok(RunSetup {
        model,
        process,
        chain,
        forward,
        spot,
        contract,
        strikes,
        tree,
        spot_direct,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const YEAR_STRIP: &str = "
model.type=one_factor
model.sigma=0.7
model.alpha=4
model.forward=20
contract.strike=5,10
contract.dates=12
contract.q_max=6
tree.points=10
";

    #[test]
    fn resolves_defaults() {
        let s = resolve(&RawConfig::parse(YEAR_STRIP).unwrap()).unwrap();
        assert_eq!(s.strikes, vec![5.0, 10.0]);
        assert_eq!(s.contract.volume_max, 72.0);
        assert_eq!(s.tree.method, TransitionMethod::Quadrature);
        assert_eq!(s.forward.len(), 13);
        assert!(!s.tree.model_hash.is_empty());
    }

    #[test]
    fn field_level_errors() {
        for (extra, field) in [
            ("contract.mode=soft", "contract.mode"),
            ("tree.prune=2", "tree.prune"),
            ("model.forward_curve=nope.csv", "model.forward_curve"),
        ] {
            let e = resolve(&RawConfig::parse(&format!("{YEAR_STRIP}{extra}")).unwrap()).unwrap_err();
            assert!(matches!(e, CliError::Config(_)), "{e}");
            assert!(e.to_string().contains(field), "{e}");
        }
        let bad_model = YEAR_STRIP.replace("model.alpha=4", "model.alpha=-4");
        assert!(matches!(resolve(&RawConfig::parse(&bad_model).unwrap()), Err(CliError::Config(_))));
    }

    #[test]
    fn polyfactor_reduces_to_one_factor() {
        let text = YEAR_STRIP
            .replace("model.type=one_factor", "model.type=polyfactor")
            .replace("model.sigma=0.7\nmodel.alpha=4", "model.factor1.alpha=4\nmodel.factor1.poly=0.7");
        let s = resolve(&RawConfig::parse(&text).unwrap()).unwrap();
        let r = resolve(&RawConfig::parse(YEAR_STRIP).unwrap()).unwrap();
        for k in 0..=12 {
            assert!((s.spot.lambda2[k] - r.spot.lambda2[k]).abs() < 1e-12);
        }
    }
}
