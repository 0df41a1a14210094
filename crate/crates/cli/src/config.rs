//! Layered parameters: command-line flags over the config file over
//! built-in defaults. The seed additionally honours `CWL_SEED` between the
//! flag and the file.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};

use crate::error::{CliError, CliResult};

pub const DEFAULT_SEED: u64 = 1;

/// Parameters read from `--config`: a TOML file (top-level keys, overridden
/// by a table named after the experiment) or a run manifest.
#[derive(Debug, Default)]
pub struct FileConfig {
    pub params: Map<String, Value>,
    pub seed: Option<u64>,
}

pub fn load_config(path: &Path, experiment: &str) -> CliResult<FileConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
    if path.extension().is_some_and(|e| e == "json") {
        return from_manifest(&text, experiment, path);
    }
    let table: toml::Table = toml::from_str(&text)
        .map_err(|e| CliError::Usage(format!("cannot parse {}: {e}", path.display())))?;
    let value = serde_json::to_value(table).map_err(|e| CliError::Usage(e.to_string()))?;
    let Value::Object(top) = value else {
        unreachable!("a TOML table converts to an object")
    };
    let mut params = Map::new();
    let mut section = None;
    for (k, v) in top {
        match v {
            Value::Object(inner) if k == experiment => section = Some(inner),
            Value::Object(_) => {}
            other => {
                params.insert(k, other);
            }
        }
    }
    if let Some(inner) = section {
        params.extend(inner);
    }
    let seed = match params.remove("seed") {
        Some(v) => Some(v.as_u64().ok_or_else(|| {
            CliError::Usage(format!("seed must be a non-negative integer, got {v}"))
        })?),
        None => None,
    };
    Ok(FileConfig { params, seed })
}

fn from_manifest(text: &str, experiment: &str, path: &Path) -> CliResult<FileConfig> {
    let m: Value = serde_json::from_str(text)
        .map_err(|e| CliError::Usage(format!("cannot parse {}: {e}", path.display())))?;
    let found = m.get("experiment").and_then(Value::as_str).unwrap_or("");
    if found != experiment {
        return Err(CliError::Usage(format!(
            "manifest {} records experiment '{found}', not '{experiment}'",
            path.display()
        )));
    }
    let params = match m.get("params") {
        Some(Value::Object(p)) => p.clone(),
        _ => {
            return Err(CliError::Usage(format!(
                "manifest {} has no params",
                path.display()
            )))
        }
    };
    Ok(FileConfig {
        params,
        seed: m.get("seed").and_then(Value::as_u64),
    })
}

/// Merges `defaults`, then the file parameters, then the non-null fields of
/// `flags`, and returns the typed result with the merged object.
pub fn layer<P: Serialize + DeserializeOwned>(
    defaults: Value,
    file: &FileConfig,
    flags: &P,
) -> CliResult<(P, Value)> {
    let Value::Object(mut merged) = defaults else {
        unreachable!("defaults are an object")
    };
    merged.extend(file.params.clone());
    let Value::Object(cli) =
        serde_json::to_value(flags).map_err(|e| CliError::Usage(e.to_string()))?
    else {
        unreachable!("parameter structs serialize to objects")
    };
    for (k, v) in cli {
        if !v.is_null() {
            merged.insert(k, v);
        }
    }
    merged.retain(|_, v| !v.is_null());
    let merged = Value::Object(merged);
    let typed = serde_json::from_value(merged.clone())
        .map_err(|e| CliError::Usage(format!("bad configuration: {e}")))?;
    Ok((typed, merged))
}

pub fn resolve_seed(flag: Option<u64>, file: Option<u64>) -> CliResult<u64> {
    if let Some(s) = flag {
        return Ok(s);
    }
    if let Ok(v) = std::env::var("CWL_SEED") {
        return v.trim().parse().map_err(|_| {
            CliError::Usage(format!(
                "CWL_SEED must be a non-negative integer, got '{v}'"
            ))
        });
    }
    Ok(file.unwrap_or(DEFAULT_SEED))
}

/// A parameter that has no default.
pub fn required<T: Clone>(value: &Option<T>, name: &str) -> CliResult<T> {
    value.clone().ok_or_else(|| {
        CliError::Usage(format!(
            "missing required parameter '{name}' (flag --{})",
            name.replace('_', "-")
        ))
    })
}
