//! Configuration loading: a TOML file, `--key=value` overrides, and strict
//! deserialization into per-command parameter structs.

use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use toml::{Table, Value};

use crate::error::CliError;

pub struct RawConfig {
    pub table: Table,
}

impl RawConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let table = match path {
            None => Table::new(),
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| CliError::Input(format!("{}: {e}", p.display())))?;
                text.parse::<Table>().map_err(|e| CliError::Input(format!("{}: {e}", p.display())))?
            }
        };
        Ok(Self { table })
    }

    /// Applies `--a.b=value` overrides; values are read as TOML literals and
    /// fall back to plain strings.
    pub fn apply_overrides(&mut self, overrides: &[String]) -> Result<(), CliError> {
        for raw in overrides {
            let body = raw
                .strip_prefix("--")
                .ok_or_else(|| CliError::Input(format!("override '{raw}' must look like --key=value")))?;
            let (key, value) =
                body.split_once('=').ok_or_else(|| CliError::Input(format!("override '{raw}' must look like --key=value")))?;
            let key = key.replace('-', "_");
            if key.is_empty() || key.split('.').any(str::is_empty) {
                return Err(CliError::Input(format!("override '{raw}' has an empty key")));
            }
            set_path(&mut self.table, &key, parse_literal(value))?;
        }
        Ok(())
    }

    pub fn take_string(&mut self, key: &str) -> Result<Option<String>, CliError> {
        match self.table.remove(key) {
            None => Ok(None),
            Some(Value::String(s)) => Ok(Some(s)),
            Some(other) => Err(CliError::Input(format!("{key}: expected a string, got {}", other.type_str()))),
        }
    }

    pub fn take_threads(&mut self) -> Result<Option<usize>, CliError> {
        match self.table.remove("threads") {
            None => Ok(None),
            Some(Value::Integer(n)) if n >= 1 => Ok(Some(n as usize)),
            Some(other) => Err(CliError::Input(format!("threads: expected a positive integer, got {other}"))),
        }
    }

    pub fn take_out_dir(&mut self) -> Result<Option<PathBuf>, CliError> {
        Ok(self.take_string("out_dir")?.map(PathBuf::from))
    }

    /// Deserializes the remaining keys, reporting the failing key path.
    pub fn into_params<T: DeserializeOwned>(self) -> Result<T, CliError> {
        let value = Value::Table(self.table);
        serde_path_to_error::deserialize(value).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            if path == "." {
                CliError::Input(inner.to_string())
            } else {
                CliError::Input(format!("{path}: {inner}"))
            }
        })
    }
}

fn parse_literal(raw: &str) -> Value {
    match format!("v = {raw}").parse::<Table>() {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| Value::String(raw.to_string())),
        Err(_) => Value::String(raw.to_string()),
    }
}

fn set_path(table: &mut Table, key: &str, value: Value) -> Result<(), CliError> {
    let mut parts: Vec<&str> = key.split('.').collect();
    let last = parts.pop().unwrap();
    let mut cursor = table;
    for (depth, part) in parts.iter().enumerate() {
        let entry = cursor.entry(part.to_string()).or_insert_with(|| Value::Table(Table::new()));
        cursor = match entry {
            Value::Table(t) => t,
            _ => return Err(CliError::Input(format!("{}: not a table", parts[..=depth].join(".")))),
        };
    }
    cursor.insert(last.to_string(), value);
    Ok(())
}

/// Accumulates validation failures as `key: message`.
#[derive(Default)]
pub struct Checks {
    errors: Vec<String>,
}

impl Checks {
    pub fn positive(&mut self, key: &str, v: f64) -> &mut Self {
        if !(v > 0.0 && v.is_finite()) {
            self.errors.push(format!("{key}: must be positive, got {v}"));
        }
        self
    }

    pub fn non_negative(&mut self, key: &str, v: f64) -> &mut Self {
        if !(v >= 0.0 && v.is_finite()) {
            self.errors.push(format!("{key}: must be non-negative, got {v}"));
        }
        self
    }

    pub fn finite(&mut self, key: &str, v: f64) -> &mut Self {
        if !v.is_finite() {
            self.errors.push(format!("{key}: must be finite, got {v}"));
        }
        self
    }

    pub fn at_least(&mut self, key: &str, v: usize, min: usize) -> &mut Self {
        if v < min {
            self.errors.push(format!("{key}: must be at least {min}, got {v}"));
        }
        self
    }

    pub fn require(&mut self, ok: bool, message: impl Into<String>) -> &mut Self {
        if !ok {
            self.errors.push(message.into());
        }
        self
    }

    pub fn finish(&mut self) -> Result<(), CliError> {
        if self.errors.is_empty() {
            Ok(())
        } else {
            Err(CliError::Input(std::mem::take(&mut self.errors).join("\n")))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overrides_parse_as_toml_literals() {
        let mut raw = RawConfig { table: "g = 0.2\nn_max = 4\n".parse().unwrap() };
        raw.apply_overrides(&["--g=0.1".into(), "--xi=[0.001, 0.1]".into(), "--netlist=a/b.net".into(), "--rates.gamma1=1".into()])
            .unwrap();
        assert_eq!(raw.table["g"].as_float(), Some(0.1));
        assert_eq!(raw.table["xi"].as_array().unwrap().len(), 2);
        assert_eq!(raw.table["netlist"].as_str(), Some("a/b.net"));
        assert_eq!(raw.table["rates"]["gamma1"].as_integer(), Some(1));
        assert!(raw.apply_overrides(&["g=1".into()]).is_err());
    }
}
