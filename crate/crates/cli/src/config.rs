//! Setting resolution: built-in defaults, then a flat key-value config file,
//! then command-line flags, then the `IFR_SEED` environment variable for the
//! master seed.

use std::path::Path;

use ifr_core::ModelKind;
use serde_json::Value;

use crate::CliError;

/// Flat key-value configuration file (a single JSON object; keys use the
/// same names as the long flags).
#[derive(Debug, Default)]
pub struct FileConfig(serde_json::Map<String, Value>);

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("cannot read config file {path:?}: {e}")))?;
        let value: Value = serde_json::from_str(&text)
            .map_err(|e| CliError::config(format!("config file {path:?} is not valid JSON: {e}")))?;
        match value {
            Value::Object(map) => Ok(Self(map)),
            _ => Err(CliError::config(format!(
                "config file {path:?} must contain a single JSON object"
            ))),
        }
    }

    pub fn string(&self, key: &str) -> Result<Option<String>, CliError> {
        match self.0.get(key) {
            None => Ok(None),
            Some(Value::String(s)) => Ok(Some(s.clone())),
            Some(other) => Ok(Some(other.to_string())),
        }
    }

    pub fn f64(&self, key: &str) -> Result<Option<f64>, CliError> {
        match self.0.get(key) {
            None => Ok(None),
            Some(Value::Number(n)) => Ok(n.as_f64()),
            Some(Value::String(s)) => s
                .parse::<f64>()
                .map(Some)
                .map_err(|_| CliError::config(format!("config key '{key}' is not a number"))),
            Some(_) => Err(CliError::config(format!(
                "config key '{key}' is not a number"
            ))),
        }
    }

    pub fn usize(&self, key: &str) -> Result<Option<usize>, CliError> {
        match self.f64(key)? {
            None => Ok(None),
            Some(v) if v >= 0.0 && v.fract() == 0.0 => Ok(Some(v as usize)),
            Some(v) => Err(CliError::config(format!(
                "config key '{key}' must be a nonnegative integer, got {v}"
            ))),
        }
    }

    pub fn u64(&self, key: &str) -> Result<Option<u64>, CliError> {
        Ok(self.usize(key)?.map(|v| v as u64))
    }
}

/// Applies the `IFR_SEED` environment override on top of flag/file/default.
pub fn resolve_seed(
    flag: Option<u64>,
    file: &FileConfig,
    default: u64,
) -> Result<u64, CliError> {
    let base = match flag {
        Some(s) => s,
        None => file.u64("seed")?.unwrap_or(default),
    };
    match std::env::var("IFR_SEED") {
        Ok(s) => s
            .parse::<u64>()
            .map_err(|_| CliError::config(format!("IFR_SEED is not a valid seed: '{s}'"))),
        Err(_) => Ok(base),
    }
}

pub fn parse_models(spec: &str) -> Result<Vec<ModelKind>, CliError> {
    let models: Vec<ModelKind> = spec
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| s.parse::<ModelKind>().map_err(CliError::from))
        .collect::<Result<_, _>>()?;
    if models.is_empty() {
        return Err(CliError::config("no models requested".into()));
    }
    Ok(models)
}

pub fn parse_cases(spec: &str) -> Result<Vec<u8>, CliError> {
    let cases: Vec<u8> = spec
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| {
            s.trim()
                .parse::<u8>()
                .map_err(|_| CliError::config(format!("invalid case '{s}'")))
        })
        .collect::<Result<_, _>>()?;
    if cases.is_empty() {
        return Err(CliError::config("no cases requested".into()));
    }
    Ok(cases)
}

pub fn parse_id_list(spec: &str) -> Vec<String> {
    spec.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::to_string)
        .collect()
}
