use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use serde_json::{Map, Value};

use crate::error::CliError;

/// Parameter resolution: command-line flag, then config file, then default.
///
/// Every resolved value is echoed into the summary. Keys in the config
/// file that no parameter consumed are reported by [`Params::finish`].
pub struct Params {
    file: BTreeMap<String, String>,
    used: BTreeSet<String>,
    echo: Map<String, Value>,
}

fn normalize(key: &str) -> String {
    key.trim().replace('_', "-")
}

impl Params {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let file = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| CliError::Validation(format!("cannot read config {}: {e}", p.display())))?;
                parse_config(&text)?
            }
            None => BTreeMap::new(),
        };
        Ok(Self { file, used: BTreeSet::new(), echo: Map::new() })
    }

    pub fn get<T>(&mut self, key: &str, flag: Option<T>, default: T) -> Result<T, CliError>
    where
        T: FromStr + Clone + Into<Value>,
        T::Err: Display,
    {
        let key = normalize(key);
        let value = match flag {
            Some(v) => v,
            None => match self.file.get(&key) {
                Some(raw) => raw
                    .parse()
                    .map_err(|e| CliError::Validation(format!("config value for `{key}` ({raw}): {e}")))?,
                None => default,
            },
        };
        self.echo.insert(key.clone(), value.clone().into());
        self.used.insert(key);
        Ok(value)
    }

    /// Like [`Params::get`] without a default; absence is a validation error.
    pub fn require(&mut self, key: &str, flag: Option<String>) -> Result<String, CliError> {
        let v = self.get(key, flag, String::new())?;
        if v.is_empty() {
            return Err(CliError::Validation(format!("missing required parameter `--{key}`")));
        }
        Ok(v)
    }

    pub fn finish(&self) -> Result<(), CliError> {
        let unknown: Vec<&str> = self.file.keys().filter(|k| !self.used.contains(*k)).map(|k| k.as_str()).collect();
        if unknown.is_empty() {
            Ok(())
        } else {
            Err(CliError::Validation(format!("unknown config key(s): {}", unknown.join(", "))))
        }
    }

    pub fn echo(&self) -> &Map<String, Value> {
        &self.echo
    }
}

pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut out = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(CliError::Validation(format!("config line {}: expected `key = value`", i + 1)));
        };
        let key = normalize(k);
        let value = v.trim().trim_matches('"').to_string();
        if key.is_empty() {
            return Err(CliError::Validation(format!("config line {}: empty key", i + 1)));
        }
        if out.insert(key.clone(), value).is_some() {
            return Err(CliError::Validation(format!("config line {}: duplicate key `{key}`", i + 1)));
        }
    }
    Ok(out)
}

pub fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), CliError> {
    if ok { Ok(()) } else { Err(CliError::Validation(msg())) }
}
