//! Experiment configuration: a TOML file, optionally patched by dotted
//! `key=value` overrides and the `REFPRICE_SEED` environment variable.
//!
//! Precedence, lowest first: file, `REFPRICE_SEED`, command-line overrides.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use toml::{Table, Value};

use crate::error::{Error, Result};
use crate::model::{Instance, NoiseSpec};
use crate::policies::PolicyKind;

pub const SEED_ENV: &str = "REFPRICE_SEED";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceConfig {
    pub a: f64,
    pub b: f64,
    pub eta_plus: f64,
    pub eta_minus: f64,
    pub p_max: f64,
    /// Defaults to the unconstrained no-reference optimum `b / (2a)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_ratio_bound: Option<f64>,
}

impl InstanceConfig {
    pub fn build(&self) -> Result<Instance<f64>> {
        let prb = self.p_ratio_bound.unwrap_or(self.b / (2.0 * self.a));
        Ok(Instance::new(
            self.a,
            self.b,
            self.eta_plus,
            self.eta_minus,
            self.p_max,
            prb,
        )?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Horizon for `simulate` and `solve`.
    pub horizon: usize,
    /// Horizons for `sweep`.
    #[serde(default)]
    pub horizons: Vec<usize>,
    #[serde(default = "default_seeds")]
    pub seeds: usize,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default)]
    pub r1: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
}

fn default_seeds() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub instance: InstanceConfig,
    #[serde(default)]
    pub noise: NoiseSpec,
    pub policy: PolicyKind,
    pub run: RunConfig,
}

impl ExperimentConfig {
    /// Reads `path`, applies `seed_env` and then `overrides`, and validates.
    pub fn load(path: &Path, overrides: &[String], seed_env: Option<&str>) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text, overrides, seed_env)
    }

    pub fn from_toml(text: &str, overrides: &[String], seed_env: Option<&str>) -> Result<Self> {
        let mut table: Table = text.parse().map_err(|e| Error::Config(format!("{e}")))?;
        if let Some(seed) = seed_env {
            let seed: u64 = seed
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("{SEED_ENV}={seed:?} is not an unsigned integer")))?;
            let seed = i64::try_from(seed).map_err(|_| Error::Config(format!("{SEED_ENV}={seed} is too large")))?;
            set_path(&mut table, "run.base_seed", Value::Integer(seed))?;
        }
        for item in overrides {
            apply_override(&mut table, item)?;
        }
        let cfg: Self = Value::Table(table.clone())
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        // unit variants such as `kind = "none"` silently accept extra keys
        let canonical = Table::try_from(&cfg).map_err(|e| Error::Config(e.to_string()))?;
        reject_unused(&table, &canonical, "")?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let inst = self.instance.build()?;
        self.noise.validate()?;
        self.policy.validate(&inst)?;
        let run = &self.run;
        if run.horizon == 0 {
            return Err(Error::Config("run.horizon must be at least 1".into()));
        }
        if run.seeds == 0 {
            return Err(Error::Config("run.seeds must be at least 1".into()));
        }
        if run.horizons.contains(&0) {
            return Err(Error::Config("run.horizons entries must be at least 1".into()));
        }
        inst.check_price("run.r1", run.r1)?;
        Ok(())
    }

    pub fn instance(&self) -> Instance<f64> {
        self.instance.build().expect("validated on load")
    }
}

/// Applies one `dotted.key=value` override. The value is read as a TOML
/// literal when possible and as a bare string otherwise, so both
/// `run.seeds=50` and `policy.kind=optimal_fixed` work.
pub fn apply_override(table: &mut Table, item: &str) -> Result<()> {
    let (key, raw) = item
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override {item:?} is not of the form key=value")))?;
    let key = key.trim();
    let raw = raw.trim();
    let value = format!("v = {raw}")
        .parse::<Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| Value::String(raw.to_string()));
    set_path(table, key, value)
}

fn reject_unused(input: &Table, canonical: &Table, prefix: &str) -> Result<()> {
    for (k, v) in input {
        let key = format!("{prefix}{k}");
        match (v, canonical.get(k)) {
            (_, None) => return Err(Error::Config(format!("unknown key `{key}`"))),
            (Value::Table(inner), Some(Value::Table(canon))) => reject_unused(inner, canon, &format!("{key}."))?,
            _ => {}
        }
    }
    Ok(())
}

fn set_path(table: &mut Table, key: &str, value: Value) -> Result<()> {
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(Error::Config(format!("malformed override key {key:?}")));
    }
    let (last, parents) = parts.split_last().expect("split yields one part");
    let mut cur = table;
    for p in parents {
        let entry = cur.entry(p.to_string()).or_insert_with(|| Value::Table(Table::new()));
        cur = entry
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("override {key:?}: {p} is not a table")))?;
    }
    cur.insert(last.to_string(), value);
    Ok(())
}
