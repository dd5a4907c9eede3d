use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};

/// Flat `key = value` parameter file; `#` starts a comment.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunConfig {
    values: BTreeMap<String, String>,
}

impl RunConfig {
    pub fn parse(text: &str, allowed: &[&str]) -> Result<Self> {
        let mut values = BTreeMap::new();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) =
                line.split_once('=').ok_or_else(|| anyhow!("line {}: expected key=value, got '{line}'", no + 1))?;
            let key = key.trim().to_ascii_lowercase();
            if !allowed.contains(&key.as_str()) {
                bail!("line {}: unknown key '{key}'", no + 1);
            }
            if values.insert(key.clone(), value.trim().to_string()).is_some() {
                bail!("line {}: duplicate key '{key}'", no + 1);
            }
        }
        Ok(RunConfig { values })
    }

    pub fn load(path: &Path, allowed: &[&str]) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        Self::parse(&text, allowed).with_context(|| format!("in config {}", path.display()))
    }

    pub fn get_str(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        self.values
            .get(key)
            .map(|v| v.parse::<T>().map_err(|e| anyhow!("config key '{key}': {e}")))
            .transpose()
    }

    /// Flag value if given, else the config value.
    pub fn pick<T: FromStr>(&self, flag: Option<T>, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        match flag {
            Some(v) => Ok(Some(v)),
            None => self.get(key),
        }
    }

    pub fn require<T: FromStr>(&self, flag: Option<T>, key: &str) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        self.pick(flag, key)?.ok_or_else(|| anyhow!("missing required parameter '{key}' (flag or config)"))
    }
}

pub const SOLVER_KEYS: &[&str] =
    &["mu", "lambda", "gamma", "eta", "beta", "rho", "alpha", "gl_len", "patch", "norm", "tol", "max_iter", "sweeps"];
pub const BLIND_KEYS: &[&str] =
    &["varrho_over_mu", "ksize", "outer_tol", "outer_max_iter", "inner_iter", "boundary_prep"];

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_rejects() {
        let c = RunConfig::parse("# run\nmu = 200\nnorm=l0  # trailing\n\n", &["mu", "norm"]).unwrap();
        assert_eq!(c.get::<f64>("mu").unwrap(), Some(200.0));
        assert_eq!(c.get_str("norm"), Some("l0"));
        assert_eq!(c.pick(Some(5.0), "mu").unwrap(), Some(5.0));
        assert!(c.require::<f64>(None, "lambda").is_err());
        assert!(RunConfig::parse("nope = 1", &["mu"]).is_err());
        assert!(RunConfig::parse("mu 1", &["mu"]).is_err());
        assert!(RunConfig::parse("mu=1\nmu=2", &["mu"]).is_err());
        assert!(RunConfig::parse("mu=abc", &["mu"]).unwrap().get::<f64>("mu").is_err());
    }
}
