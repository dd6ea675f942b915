use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Flat `key = value` manifest. Blank lines and `#` comments are ignored;
/// later keys override earlier ones.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Config {
    entries: BTreeMap<String, String>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                line: i + 1,
                message: format!("expected `key = value`, got `{line}`"),
            })?;
            let key = key.trim();
            if key.is_empty() || key.contains(char::is_whitespace) {
                return Err(Error::Parse {
                    line: i + 1,
                    message: format!("bad key `{key}`"),
                });
            }
            entries.insert(key.to_string(), value.trim().to_string());
        }
        Ok(Config { entries })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn set(&mut self, key: &str, value: impl ToString) {
        self.entries.insert(key.to_string(), value.to_string());
    }

    pub fn contains(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        match self.entries.get(key) {
            None => Ok(None),
            Some(v) => v
                .parse::<T>()
                .map(Some)
                .map_err(|e| Error::Config(format!("key `{key}`: cannot parse `{v}`: {e}"))),
        }
    }

    pub fn require<T: FromStr>(&self, key: &str) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        self.get(key)?.ok_or_else(|| Error::Config(format!("missing key `{key}`")))
    }

    pub fn get_or<T: FromStr>(&self, key: &str, default: T) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        Ok(self.get(key)?.unwrap_or(default))
    }

    /// Comma-separated list.
    pub fn list<T: FromStr>(&self, key: &str) -> Result<Option<Vec<T>>>
    where
        T::Err: std::fmt::Display,
    {
        let Some(v) = self.entries.get(key) else {
            return Ok(None);
        };
        v.split(',')
            .map(|s| {
                s.trim()
                    .parse::<T>()
                    .map_err(|e| Error::Config(format!("key `{key}`: cannot parse `{s}`: {e}")))
            })
            .collect::<Result<Vec<_>>>()
            .map(Some)
    }

    pub fn to_text(&self) -> String {
        self.entries.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Detect,
    ReduceFidelity,
    Recover,
    Refute,
    Sweep,
}

impl FromStr for ExperimentKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "detect" => ExperimentKind::Detect,
            "reduce-fidelity" | "fidelity" => ExperimentKind::ReduceFidelity,
            "recover" => ExperimentKind::Recover,
            "refute" => ExperimentKind::Refute,
            "sweep" => ExperimentKind::Sweep,
            other => return Err(Error::param("experiment", format!("unknown kind `{other}`"))),
        })
    }
}

/// The common header of every experiment plus its model block.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub trials: usize,
    pub seed: u64,
    pub significance: f64,
    pub out: Option<PathBuf>,
    /// Fill the `runtime_ms` column. Off by default so that output bytes
    /// depend only on the seed.
    pub record_runtime: bool,
    pub params: Config,
}

impl ExperimentConfig {
    pub fn from_config(params: Config) -> Result<Self> {
        let kind: ExperimentKind = params.require::<String>("experiment")?.parse()?;
        let cfg = ExperimentConfig {
            kind,
            trials: params.get_or("trials", 100)?,
            seed: params.get_or("seed", 0)?,
            significance: params.get_or("significance", 0.01)?,
            out: params.get::<String>("out")?.map(PathBuf::from),
            record_runtime: params.get_or("record_runtime", false)?,
            params,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn new(kind: ExperimentKind, trials: usize, seed: u64, params: Config) -> Result<Self> {
        let cfg = ExperimentConfig {
            kind,
            trials,
            seed,
            significance: params.get_or("significance", 0.01)?,
            out: None,
            record_runtime: false,
            params,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::param("trials", "need at least one trial"));
        }
        if !(self.significance > 0.0 && self.significance < 1.0) {
            return Err(Error::param("significance", "must lie in (0, 1)"));
        }
        Ok(())
    }
}
