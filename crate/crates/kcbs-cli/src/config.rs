//! Flat key = value config files.
//!
//! One key per line, `#` starts a comment, values keep the same syntax as
//! the matching command-line flag (state specs stay tagged records like
//! `coherent:0.4`). Precedence is command line and KCBS_* environment
//! variables first, then the config file, then built-in defaults.

use std::collections::BTreeMap;
use std::path::Path;

pub struct Config {
    values: BTreeMap<String, String>,
}

impl Config {
    pub fn empty() -> Config {
        Config {
            values: BTreeMap::new(),
        }
    }

    pub fn load(path: &Path, allowed_keys: &[&str]) -> Result<Config, String> {
        let text =
            std::fs::read_to_string(path).map_err(|e| format!("config {}: {e}", path.display()))?;
        Self::parse(&text, allowed_keys).map_err(|e| format!("config {}: {e}", path.display()))
    }

    pub fn parse(text: &str, allowed_keys: &[&str]) -> Result<Config, String> {
        let mut values = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| format!("line {}: expected `key = value`", idx + 1))?;
            let key = key.trim().to_string();
            if !allowed_keys.contains(&key.as_str()) {
                return Err(format!(
                    "line {}: unknown key `{key}` for this command (allowed: {})",
                    idx + 1,
                    allowed_keys.join(", ")
                ));
            }
            if values
                .insert(key.clone(), value.trim().to_string())
                .is_some()
            {
                return Err(format!("line {}: duplicate key `{key}`", idx + 1));
            }
        }
        Ok(Config { values })
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(|s| s.as_str())
    }
}
