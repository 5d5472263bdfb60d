//! Flat `key = value` config files and flag/file/default resolution.
//!
//! Precedence: command-line flag, then config file, then built-in default.
//! Every resolved value is logged to stderr as `config: key = value` so a
//! run's exact configuration is always recoverable from its log.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use crate::CliError;

pub struct ConfigMap {
    entries: BTreeMap<String, String>,
    origin: String,
}

/// Loads the file if a path is given; `None` yields an empty map so every
/// key falls through to flags and defaults.
pub fn load(path: Option<&Path>) -> Result<ConfigMap, CliError> {
    let Some(path) = path else {
        return Ok(ConfigMap {
            entries: BTreeMap::new(),
            origin: "<no config file>".into(),
        });
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let mut entries = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(CliError::Config(format!(
                "{}:{}: expected `key = value`, got `{raw}`",
                path.display(),
                lineno + 1
            )));
        };
        let key = key.trim().to_string();
        if entries.insert(key.clone(), value.trim().to_string()).is_some() {
            return Err(CliError::Config(format!(
                "{}:{}: duplicate key `{key}`",
                path.display(),
                lineno + 1
            )));
        }
    }
    Ok(ConfigMap {
        entries,
        origin: path.display().to_string(),
    })
}

impl ConfigMap {
    /// Resolves one key with flag/file/default precedence and logs it.
    /// Keys match the long flag names (kebab-case).
    pub fn resolve<T: FromStr + Display>(
        &mut self,
        key: &str,
        flag: Option<T>,
        default: T,
    ) -> Result<T, CliError> {
        let value = match flag {
            Some(v) => v,
            None => match self.entries.remove(key) {
                Some(raw) => raw.parse::<T>().map_err(|_| {
                    CliError::Config(format!("{}: key `{key}`: cannot parse `{raw}`", self.origin))
                })?,
                None => default,
            },
        };
        log_resolved(key, &value);
        Ok(value)
    }

    /// Fails on any key the subcommand did not consume.
    pub fn finish(self) -> Result<(), CliError> {
        if let Some(key) = self.entries.keys().next() {
            return Err(CliError::Config(format!(
                "{}: unknown key `{key}`",
                self.origin
            )));
        }
        Ok(())
    }
}

/// Same log line for values that are not file-overridable (paths, modes).
pub fn log_resolved(key: &str, value: &dyn Display) {
    eprintln!("config: {key} = {value}");
}
