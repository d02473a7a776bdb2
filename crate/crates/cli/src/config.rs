//! Flat sectioned `key = value` run configuration.
//!
//! Lines are `[section]`, `key = value`, blank, or comments starting with `#` or `;`.
//! Every key must appear in [`SCHEMA`]; anything else is rejected with its line.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("line {line}: unknown section [{section}]")]
    UnknownSection { line: usize, section: String },
    #[error("line {line}: unknown key `{key}` in [{section}]")]
    UnknownKey { line: usize, section: String, key: String },
    #[error("line {line}: duplicate key `{section}.{key}`")]
    Duplicate { line: usize, section: String, key: String },
    #[error("missing required key `{0}`")]
    Missing(String),
    #[error("key `{key}`: {msg}")]
    Invalid { key: String, msg: String },
}

/// Accepted sections and their keys.
pub const SCHEMA: &[(&str, &[&str])] = &[
    ("experiment", &["kind", "n_list", "tolerance"]),
    ("domain", &["dim", "cells_per_period", "lo", "hi"]),
    ("sequence", &["kind", "mean", "amplitude", "a", "b", "value", "limit", "alpha", "beta"]),
    ("probes", &["seed", "modes", "tau_modes"]),
    ("evo", &["regime", "dim", "rank", "complex", "cells_per_period"]),
    ("thermo", &["gamma", "lambda"]),
    ("maxwell", &["variant", "lambda"]),
    ("divcurl", &["mode"]),
    ("divtest", &["fixture", "vanish", "persist"]),
    ("recover", &["pairs"]),
    ("helmholtz", &["flavor"]),
    ("output", &["name"]),
];

fn known_keys(section: &str) -> Option<&'static [&'static str]> {
    SCHEMA.iter().find(|(s, _)| *s == section).map(|(_, k)| *k)
}

/// Parsed configuration; `parse(render(c)) == c`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RunConfig {
    sections: BTreeMap<String, BTreeMap<String, String>>,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = RunConfig::default();
        let mut current: Option<String> = None;
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let l = raw.trim();
            if l.is_empty() || l.starts_with('#') || l.starts_with(';') {
                continue;
            }
            if let Some(rest) = l.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .ok_or_else(|| ConfigError::Syntax { line, msg: format!("unterminated section header `{l}`") })?
                    .trim();
                if known_keys(name).is_none() {
                    return Err(ConfigError::UnknownSection { line, section: name.to_string() });
                }
                cfg.sections.entry(name.to_string()).or_default();
                current = Some(name.to_string());
                continue;
            }
            let (k, v) = l
                .split_once('=')
                .ok_or_else(|| ConfigError::Syntax { line, msg: format!("expected `key = value`, found `{l}`") })?;
            let (k, v) = (k.trim(), v.trim());
            let section = current.clone().ok_or_else(|| ConfigError::Syntax { line, msg: format!("key `{k}` outside any section") })?;
            if k.is_empty() {
                return Err(ConfigError::Syntax { line, msg: "empty key".into() });
            }
            if !known_keys(&section).unwrap_or(&[]).contains(&k) {
                return Err(ConfigError::UnknownKey { line, section, key: k.to_string() });
            }
            let entries = cfg.sections.entry(section.clone()).or_default();
            if entries.insert(k.to_string(), v.to_string()).is_some() {
                return Err(ConfigError::Duplicate { line, section, key: k.to_string() });
            }
        }
        Ok(cfg)
    }

    /// Canonical text: sections and keys in sorted order.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for (s, keys) in &self.sections {
            let _ = writeln!(out, "[{s}]");
            for (k, v) in keys {
                let _ = writeln!(out, "{k} = {v}");
            }
        }
        out
    }

    /// Hex SHA-256 of the canonical text.
    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(self.render().as_bytes()))
    }

    pub fn set(&mut self, section: &str, key: &str, value: impl Into<String>) {
        self.sections.entry(section.to_string()).or_default().insert(key.to_string(), value.into());
    }

    pub fn get(&self, section: &str, key: &str) -> Option<&str> {
        self.sections.get(section).and_then(|m| m.get(key)).map(String::as_str)
    }

    pub fn require(&self, section: &str, key: &str) -> Result<&str, ConfigError> {
        self.get(section, key).ok_or_else(|| ConfigError::Missing(format!("{section}.{key}")))
    }

    fn typed<T: std::str::FromStr>(&self, section: &str, key: &str) -> Result<Option<T>, ConfigError>
    where
        T::Err: std::fmt::Display,
    {
        self.get(section, key)
            .map(|v| v.parse::<T>().map_err(|e| ConfigError::Invalid { key: format!("{section}.{key}"), msg: format!("`{v}`: {e}") }))
            .transpose()
    }

    pub fn f64_or(&self, section: &str, key: &str, default: f64) -> Result<f64, ConfigError> {
        Ok(self.typed(section, key)?.unwrap_or(default))
    }

    pub fn usize_or(&self, section: &str, key: &str, default: usize) -> Result<usize, ConfigError> {
        Ok(self.typed(section, key)?.unwrap_or(default))
    }

    pub fn u64_or(&self, section: &str, key: &str, default: u64) -> Result<u64, ConfigError> {
        Ok(self.typed(section, key)?.unwrap_or(default))
    }

    pub fn bool_or(&self, section: &str, key: &str, default: bool) -> Result<bool, ConfigError> {
        Ok(self.typed(section, key)?.unwrap_or(default))
    }

    pub fn str_or<'a>(&'a self, section: &str, key: &str, default: &'a str) -> &'a str {
        self.get(section, key).unwrap_or(default)
    }

    fn list<T: std::str::FromStr>(&self, section: &str, key: &str) -> Result<Option<Vec<T>>, ConfigError>
    where
        T::Err: std::fmt::Display,
    {
        let Some(v) = self.get(section, key) else { return Ok(None) };
        let items = v
            .split(',')
            .map(|t| {
                let t = t.trim();
                t.parse::<T>().map_err(|e| ConfigError::Invalid { key: format!("{section}.{key}"), msg: format!("`{t}`: {e}") })
            })
            .collect::<Result<Vec<T>, _>>()?;
        if items.is_empty() {
            return Err(ConfigError::Invalid { key: format!("{section}.{key}"), msg: "empty list".into() });
        }
        Ok(Some(items))
    }

    pub fn f64_list(&self, section: &str, key: &str) -> Result<Option<Vec<f64>>, ConfigError> {
        self.list(section, key)
    }

    /// `experiment.n_list`, required, positive and strictly increasing.
    pub fn n_list(&self) -> Result<Vec<usize>, ConfigError> {
        let v: Vec<usize> = self.list("experiment", "n_list")?.ok_or_else(|| ConfigError::Missing("experiment.n_list".into()))?;
        if v[0] == 0 || v.windows(2).any(|w| w[1] <= w[0]) {
            return Err(ConfigError::Invalid { key: "experiment.n_list".into(), msg: "must be positive and strictly increasing".into() });
        }
        Ok(v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_key_reports_its_line() {
        let e = RunConfig::parse("[experiment]\nkind = hconv\n\n[domain]\ncells = 4\n").unwrap_err();
        assert_eq!(e, ConfigError::UnknownKey { line: 5, section: "domain".into(), key: "cells".into() });
        assert!(matches!(RunConfig::parse("[nope]\n"), Err(ConfigError::UnknownSection { line: 1, .. })));
        assert!(matches!(RunConfig::parse("kind = x\n"), Err(ConfigError::Syntax { line: 1, .. })));
        assert!(matches!(RunConfig::parse("[probes]\nseed=1\nseed=2"), Err(ConfigError::Duplicate { line: 3, .. })));
    }

    #[test]
    fn render_is_canonical() {
        let a = RunConfig::parse("# c\n[sequence]\nb = 4\na = 1\n[experiment]\nkind=cell\n").unwrap();
        assert_eq!(a.render(), "[experiment]\nkind = cell\n[sequence]\na = 1\nb = 4\n");
        assert_eq!(RunConfig::parse(&a.render()).unwrap(), a);
    }

    #[test]
    fn n_list_validation() {
        let c = RunConfig::parse("[experiment]\nn_list = 1, 2,4\n").unwrap();
        assert_eq!(c.n_list().unwrap(), vec![1, 2, 4]);
        assert_eq!(RunConfig::default().n_list(), Err(ConfigError::Missing("experiment.n_list".into())));
        assert!(RunConfig::parse("[experiment]\nn_list = 4,2\n").unwrap().n_list().is_err());
        assert!(RunConfig::parse("[experiment]\nn_list = 1,x\n").unwrap().n_list().is_err());
    }
}
