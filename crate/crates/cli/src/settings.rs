//! Run settings merged from command-line flags, an optional `key = value`
//! config file and built-in defaults, in that order of precedence.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use bohmnl_core::{make_params, Model, Scenario};

use crate::CliError;

pub const DEFAULT_SCENARIO: &str = "sch";
pub const DEFAULT_GAMMA: f64 = 0.1;
pub const DEFAULT_TEMP: f64 = 10.0;
pub const DEFAULT_T_END: f64 = 6.0;
pub const DEFAULT_DT: f64 = 1e-3;
pub const DEFAULT_SEED: u64 = 1;
pub const DEFAULT_N: usize = 1000;

/// Keys accepted in a config file; each is also a long flag.
pub const KEYS: [&str; 14] = [
    "scenario", "gamma", "temp", "mu", "t-end", "dt", "seed", "n", "out", "svg", "point", "method", "prominence",
    "input",
];

/// Raw string values by key; `point` may repeat.
#[derive(Debug, Clone, Default)]
pub struct Settings {
    values: BTreeMap<String, Vec<String>>,
}

impl Settings {
    pub fn load(config: Option<&Path>) -> Result<Self, CliError> {
        let mut s = Settings::default();
        if let Some(path) = config {
            let text = fs::read_to_string(path)
                .map_err(|e| CliError::usage(format!("cannot read config {}: {e}", path.display())))?;
            s.parse_config(&text)?;
        }
        Ok(s)
    }

    fn parse_config(&mut self, text: &str) -> Result<(), CliError> {
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::usage(format!("config line {}: expected key = value", lineno + 1)))?;
            let key = key.trim();
            if !KEYS.contains(&key) {
                return Err(CliError::usage(format!("config line {}: unknown key '{key}'", lineno + 1)));
            }
            self.values.entry(key.to_string()).or_default().push(value.trim().to_string());
        }
        Ok(())
    }

    /// A flag value replaces whatever the config file said.
    pub fn set_flag(&mut self, key: &str, value: Option<String>) {
        if let Some(v) = value {
            self.values.insert(key.to_string(), vec![v]);
        }
    }

    pub fn set_flag_list(&mut self, key: &str, values: Vec<String>) {
        if !values.is_empty() {
            self.values.insert(key.to_string(), values);
        }
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).and_then(|v| v.last()).map(String::as_str)
    }

    pub fn raw_all(&self, key: &str) -> &[String] {
        self.values.get(key).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn f64_or(&self, key: &str, default: f64) -> Result<f64, CliError> {
        match self.raw(key) {
            Some(v) => parse_f64(key, v),
            None => Ok(default),
        }
    }

    pub fn f64_required(&self, key: &str) -> Result<f64, CliError> {
        let v = self.raw(key).ok_or_else(|| CliError::missing(key))?;
        parse_f64(key, v)
    }

    pub fn u64_or(&self, key: &str, default: u64) -> Result<u64, CliError> {
        match self.raw(key) {
            Some(v) => v.parse().map_err(|_| CliError::usage(format!("--{key}: expected an integer, got '{v}'"))),
            None => Ok(default),
        }
    }

    pub fn path(&self, key: &str) -> Option<PathBuf> {
        self.raw(key).map(PathBuf::from)
    }

    /// Comma-separated list; `None` when the key is absent.
    pub fn f64_list(&self, key: &str) -> Result<Option<Vec<f64>>, CliError> {
        self.raw(key).map(|v| split_list(v).map(|s| parse_f64(key, s)).collect()).transpose()
    }

    pub fn scenario(&self) -> Result<Scenario, CliError> {
        parse_scenario(self.raw("scenario").unwrap_or(DEFAULT_SCENARIO))
    }

    pub fn scenarios(&self) -> Result<Vec<Scenario>, CliError> {
        split_list(self.raw("scenario").unwrap_or(DEFAULT_SCENARIO)).map(parse_scenario).collect()
    }

    pub fn t_end(&self) -> Result<f64, CliError> {
        self.f64_or("t-end", DEFAULT_T_END)
    }

    pub fn dt(&self) -> Result<f64, CliError> {
        self.f64_or("dt", DEFAULT_DT)
    }

    /// Single model from `scenario`, `gamma`, `temp` and the required `mu`.
    pub fn model(&self) -> Result<Model, CliError> {
        let mu = self.f64_required("mu")?;
        let gamma = self.f64_or("gamma", DEFAULT_GAMMA)?;
        let temp = self.f64_or("temp", DEFAULT_TEMP)?;
        Ok(Model::new(self.scenario()?, make_params(gamma, temp, mu)?))
    }

    /// Initial points from repeated `point = X10,X20` entries.
    pub fn points(&self) -> Result<Vec<(f64, f64)>, CliError> {
        self.raw_all("point")
            .iter()
            .map(|p| {
                let xs: Vec<&str> = p.split(',').map(str::trim).collect();
                match xs.as_slice() {
                    [a, b] => Ok((parse_f64("point", a)?, parse_f64("point", b)?)),
                    _ => Err(CliError::usage(format!("--point expects X10,X20, got '{p}'"))),
                }
            })
            .collect()
    }
}

fn split_list(v: &str) -> impl Iterator<Item = &str> {
    v.split(',').map(str::trim).filter(|s| !s.is_empty())
}

fn parse_f64(key: &str, v: &str) -> Result<f64, CliError> {
    v.trim().parse().map_err(|_| CliError::usage(format!("--{key}: expected a number, got '{v}'")))
}

fn parse_scenario(v: &str) -> Result<Scenario, CliError> {
    v.parse().map_err(|_| CliError::usage(format!("--scenario: unknown scenario '{v}' (sch, distinct, common)")))
}
