//! Layered settings: built-in defaults, then a `key = value` config file,
//! then command-line flags. Every value is kept as text until a typed getter
//! asks for it, so all three layers share one parser per key.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use serde_json::{json, Value};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Source {
    Default,
    Config,
    Flag,
}

impl Source {
    fn name(self) -> &'static str {
        match self {
            Source::Default => "default",
            Source::Config => "config",
            Source::Flag => "flag",
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Settings {
    values: BTreeMap<String, (String, Source)>,
    allowed: Vec<&'static str>,
}

impl Settings {
    pub fn new(allowed: &[&'static str], defaults: &[(&str, &str)]) -> Self {
        let mut s = Settings {
            values: BTreeMap::new(),
            allowed: allowed.to_vec(),
        };
        for (k, v) in defaults {
            s.values.insert(k.to_string(), (v.to_string(), Source::Default));
        }
        s
    }

    fn set(&mut self, key: &str, value: String, source: Source) -> Result<(), CliError> {
        if !self.allowed.contains(&key) {
            return Err(CliError::usage(format!("unknown setting '{key}'")));
        }
        self.values.insert(key.to_string(), (value, source));
        Ok(())
    }

    /// Applies a config file: one `key = value` per line, `#` starts a comment.
    pub fn apply_config_file(&mut self, path: &Path) -> Result<(), CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::usage(format!("config file {}: {e}", path.display())))?;
        self.apply_config_text(&text)
            .map_err(|e| CliError::usage(format!("config file {}: {}", path.display(), e.message())))
    }

    pub fn apply_config_text(&mut self, text: &str) -> Result<(), CliError> {
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(CliError::usage(format!("line {}: expected 'key = value'", idx + 1)));
            };
            self.set(key.trim(), value.trim().to_string(), Source::Config)
                .map_err(|e| CliError::usage(format!("line {}: {}", idx + 1, e.message())))?;
        }
        Ok(())
    }

    pub fn flag(&mut self, key: &str, value: Option<impl ToString>) -> Result<(), CliError> {
        match value {
            Some(v) => self.set(key, v.to_string(), Source::Flag),
            None => Ok(()),
        }
    }

    /// Boolean switches only ever turn a setting on from the command line.
    pub fn switch(&mut self, key: &str, on: bool) -> Result<(), CliError> {
        if on {
            self.set(key, "true".into(), Source::Flag)
        } else {
            Ok(())
        }
    }

    pub fn source(&self, key: &str) -> Option<Source> {
        self.values.get(key).map(|(_, s)| *s)
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(|(v, _)| v.as_str())
    }

    /// Drops a setting, e.g. one overridden by a competing key from a
    /// higher-precedence layer.
    pub fn remove(&mut self, key: &str) {
        self.values.remove(key);
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, CliError>
    where
        T::Err: std::fmt::Display,
    {
        self.raw(key)
            .map(|v| v.parse::<T>().map_err(|e| CliError::usage(format!("{key} = '{v}': {e}"))))
            .transpose()
    }

    pub fn require<T: FromStr>(&self, key: &str) -> Result<T, CliError>
    where
        T::Err: std::fmt::Display,
    {
        self.get(key)?.ok_or_else(|| CliError::usage(format!("missing required setting '{key}'")))
    }

    pub fn bool(&self, key: &str) -> Result<bool, CliError> {
        match self.raw(key) {
            None => Ok(false),
            Some("true" | "yes" | "1" | "on") => Ok(true),
            Some("false" | "no" | "0" | "off") => Ok(false),
            Some(v) => Err(CliError::usage(format!("{key} = '{v}': expected true or false"))),
        }
    }

    pub fn list<T: FromStr>(&self, key: &str) -> Result<Option<Vec<T>>, CliError>
    where
        T::Err: std::fmt::Display,
    {
        self.raw(key)
            .map(|v| {
                v.split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(|s| s.parse::<T>().map_err(|e| CliError::usage(format!("{key}: '{s}': {e}"))))
                    .collect()
            })
            .transpose()
    }

    /// Picks the single k form among `keys`. The highest-precedence layer
    /// that sets any of them wins; it may set only one.
    pub fn exclusive(&mut self, keys: &[&str]) -> Result<&'static str, CliError> {
        let present: Vec<(&str, Source)> = keys.iter().filter_map(|k| self.source(k).map(|s| (*k, s))).collect();
        let Some(top) = present.iter().map(|&(_, s)| s).max() else {
            return Err(CliError::usage(format!("one of {} is required", flags(keys))));
        };
        let winners: Vec<&str> = present.iter().filter(|&&(_, s)| s == top).map(|&(k, _)| k).collect();
        if winners.len() > 1 {
            return Err(CliError::usage(format!("exactly one of {} may be given", flags(keys))));
        }
        for &(k, _) in &present {
            if k != winners[0] {
                self.remove(k);
            }
        }
        Ok(self.allowed.iter().copied().find(|a| *a == winners[0]).expect("allowed key"))
    }

    pub fn to_json(&self) -> Value {
        let mut out = serde_json::Map::new();
        for (k, (v, s)) in &self.values {
            out.insert(k.clone(), json!({ "value": v, "source": s.name() }));
        }
        Value::Object(out)
    }
}

fn flags(keys: &[&str]) -> String {
    keys.iter().map(|k| format!("--{k}")).collect::<Vec<_>>().join(" / ")
}

/// `"1..10"` (inclusive) or `"1,2,5"`.
pub fn parse_seeds(text: &str) -> Result<Vec<u64>, CliError> {
    let bad = || CliError::usage(format!("seeds '{text}': expected 'a..b' or a comma list"));
    let seeds: Vec<u64> = if let Some((a, b)) = text.split_once("..") {
        let a: u64 = a.trim().parse().map_err(|_| bad())?;
        let b: u64 = b.trim().trim_start_matches('=').parse().map_err(|_| bad())?;
        if b < a {
            return Err(bad());
        }
        (a..=b).collect()
    } else {
        text.split(',').map(|s| s.trim().parse().map_err(|_| bad())).collect::<Result<_, _>>()?
    };
    if seeds.is_empty() {
        return Err(bad());
    }
    Ok(seeds)
}
