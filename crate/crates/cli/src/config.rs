//! Loading of JSON configs with embedded defaults and `--set` overrides.

use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};

use crate::UsageError;

/// Estimator and preprocessing defaults shipped with the binary.
pub const DEFAULT_PIPELINE: &str = include_str!("../config/pipeline.json");

/// Reads `path` (or the embedded `default` text), applies the overrides and
/// deserializes the result.
pub fn load<C: DeserializeOwned>(path: Option<&Path>, default: &str, sets: &[String]) -> Result<C> {
    let (text, origin) = match path {
        Some(p) => (
            fs::read_to_string(p).with_context(|| format!("cannot read {}", p.display()))?,
            p.display().to_string(),
        ),
        None => (default.to_string(), "built-in defaults".to_string()),
    };
    let mut value: Value = serde_json::from_str(&text).map_err(|e| parse_error(&origin, e))?;
    for s in sets {
        apply_set(&mut value, s)?;
    }
    serde_json::from_value(value).map_err(|e| parse_error(&origin, e))
}

/// Same as [`load`] with the default given as a value.
pub fn load_or<C: DeserializeOwned + Serialize>(path: Option<&Path>, default: &C, sets: &[String]) -> Result<C> {
    let text = serde_json::to_string(default)?;
    load(path, &text, sets)
}

fn parse_error(origin: &str, e: serde_json::Error) -> anyhow::Error {
    let msg = if e.line() > 0 {
        format!("{origin}: line {} column {}: {e}", e.line(), e.column())
    } else {
        format!("{origin}: {e}")
    };
    UsageError(msg).into()
}

/// Applies `key.path=value`. The value is read as JSON and falls back to a
/// plain string. Missing intermediate objects are created.
pub fn apply_set(root: &mut Value, spec: &str) -> Result<()> {
    let (key, raw) = spec
        .split_once('=')
        .ok_or_else(|| UsageError(format!("--set expects key=value, got '{spec}'")))?;
    let key = key.trim();
    if key.is_empty() {
        return Err(UsageError(format!("--set has an empty key in '{spec}'")).into());
    }
    let value = serde_json::from_str(raw.trim()).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut node = root;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let last = i + 1 == parts.len();
        if let Ok(idx) = part.parse::<usize>() {
            let arr = node
                .as_array_mut()
                .ok_or_else(|| UsageError(format!("--set {key}: '{part}' indexes a non-array")))?;
            let len = arr.len();
            node = arr
                .get_mut(idx)
                .ok_or_else(|| UsageError(format!("--set {key}: index {idx} out of range ({len})")))?;
        } else {
            if node.is_null() {
                *node = Value::Object(Map::new());
            }
            let obj = node
                .as_object_mut()
                .ok_or_else(|| UsageError(format!("--set {key}: '{part}' is not inside an object")))?;
            node = obj.entry(part.to_string()).or_insert(Value::Null);
        }
        if last {
            *node = value;
            return Ok(());
        }
    }
    Ok(())
}
