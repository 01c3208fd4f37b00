//! Flat `section.key=value` run configuration.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::CliError;

const KNOWN_KEYS: &[&str] = &[
    "model.type",
    "model.sigma",
    "model.alpha",
    "model.sigma1",
    "model.alpha1",
    "model.sigma2",
    "model.alpha2",
    "model.rho",
    "model.correlation",
    "model.forward",
    "model.forward_curve",
    "contract.strike",
    "contract.dates",
    "contract.delta",
    "contract.rate",
    "contract.q_min",
    "contract.q_max",
    "contract.volume_min",
    "contract.volume_max",
    "contract.mode",
    "contract.penalty_a",
    "contract.penalty_b",
    "tree.points",
    "tree.schedule",
    "tree.method",
    "tree.samples",
    "tree.quadrature_points",
    "tree.grid_samples",
    "tree.prune",
    "tree.seed",
    "tree.spot_direct",
    "run.out",
    "run.threads",
    "run.values",
    "surface.step",
    "convergence.sizes",
    "convergence.reference",
    "ls.paths",
    "ls.eval_paths",
    "ls.degree",
    "ls.seed",
];

/// Polynomial factors are given as `model.factor<i>.alpha` and `model.factor<i>.poly`.
fn is_factor_key(key: &str) -> bool {
    let Some(rest) = key.strip_prefix("model.factor") else {
        return false;
    };
    let Some((idx, field)) = rest.split_once('.') else {
        return false;
    };
    idx.parse::<usize>().is_ok() && matches!(field, "alpha" | "poly")
}

#[derive(Debug, Clone, Default)]
pub struct RawConfig {
    entries: BTreeMap<String, (usize, String)>,
    /// Directory of the config file; relative paths resolve against it.
    pub base_dir: PathBuf,
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(CliError::Config(format!("line {line_no}: expected `key=value`, got `{line}`")));
            };
            let key = key.trim().to_string();
            if !KNOWN_KEYS.contains(&key.as_str()) && !is_factor_key(&key) {
                return Err(CliError::Config(format!("line {line_no}: unknown key `{key}`")));
            }
            if let Some((prev, _)) = entries.get(&key) {
                return Err(CliError::Config(format!(
                    "line {line_no}: `{key}` already set on line {prev}"
                )));
            }
            entries.insert(key, (line_no, value.trim().to_string()));
        }
        Ok(Self {
            entries,
            base_dir: PathBuf::new(),
        })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg = Self::parse(&text)?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        self.entries.insert(key.to_string(), (0, value.into()));
    }

    pub fn contains(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|(_, v)| v.as_str())
    }

    fn describe(&self, key: &str) -> String {
        match self.entries.get(key) {
            Some((0, _)) | None => format!("`{key}`"),
            Some((l, _)) => format!("`{key}` (line {l})"),
        }
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, CliError>
    where
        T::Err: std::fmt::Display,
    {
        match self.raw(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|e| CliError::Config(format!("{}: cannot parse `{v}`: {e}", self.describe(key)))),
        }
    }

    pub fn get_or<T: FromStr>(&self, key: &str, default: T) -> Result<T, CliError>
    where
        T::Err: std::fmt::Display,
    {
        Ok(self.get(key)?.unwrap_or(default))
    }

    pub fn require<T: FromStr>(&self, key: &str) -> Result<T, CliError>
    where
        T::Err: std::fmt::Display,
    {
        self.get(key)?
            .ok_or_else(|| CliError::Config(format!("missing required key `{key}`")))
    }

    /// Comma-separated list.
    pub fn list<T: FromStr>(&self, key: &str) -> Result<Option<Vec<T>>, CliError>
    where
        T::Err: std::fmt::Display,
    {
        let Some(v) = self.raw(key) else {
            return Ok(None);
        };
        v.split(',')
            .map(|s| {
                s.trim()
                    .parse()
                    .map_err(|e| CliError::Config(format!("{}: cannot parse `{}`: {e}", self.describe(key), s.trim())))
            })
            .collect::<Result<Vec<_>, _>>()
            .map(Some)
    }

    pub fn path(&self, key: &str) -> Option<PathBuf> {
        self.raw(key).map(|v| {
            let p = PathBuf::from(v);
            if p.is_absolute() {
                p
            } else {
                self.base_dir.join(p)
            }
        })
    }

    pub(crate) fn config_error(&self, key: &str, message: impl std::fmt::Display) -> CliError {
        CliError::Config(format!("{}: {message}", self.describe(key)))
    }

    /// Indices `i` of the `model.factor<i>.*` keys present, sorted.
    pub fn factor_indices(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = self
            .entries
            .keys()
            .filter(|k| is_factor_key(k))
            .filter_map(|k| k["model.factor".len()..].split_once('.').and_then(|(i, _)| i.parse().ok()))
            .collect();
        idx.dedup();
        idx
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_lists() {
        let c = RawConfig::parse("# header\nmodel.sigma = 0.7  # vol\ncontract.strike=5,10, 15\n\n").unwrap();
        assert_eq!(c.get::<f64>("model.sigma").unwrap(), Some(0.7));
        assert_eq!(c.list::<f64>("contract.strike").unwrap(), Some(vec![5.0, 10.0, 15.0]));
        assert_eq!(c.get::<f64>("model.alpha").unwrap(), None);
    }

    #[test]
    fn diagnostics_name_the_field() {
        let e = RawConfig::parse("model.sigma=0.7\nmodel.sigam=1").unwrap_err();
        assert!(e.to_string().contains("line 2") && e.to_string().contains("model.sigam"));
        let e = RawConfig::parse("model.sigma=0.7\nmodel.sigma=0.8").unwrap_err();
        assert!(e.to_string().contains("already set on line 1"));
        let c = RawConfig::parse("tree.points=abc").unwrap();
        let e = c.get::<usize>("tree.points").unwrap_err();
        assert!(e.to_string().contains("tree.points") && e.to_string().contains("line 1"));
        assert!(RawConfig::parse("nonsense").is_err());
    }

    #[test]
    fn factor_keys() {
        let c = RawConfig::parse("model.factor2.alpha=1\nmodel.factor1.alpha=2\nmodel.factor1.poly=0.3,0.1").unwrap();
        assert_eq!(c.factor_indices(), vec![1, 2]);
        assert!(RawConfig::parse("model.factorx.alpha=1").is_err());
    }
}
