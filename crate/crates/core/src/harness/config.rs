//! Plain-text `key = value` run configs and `--set` overrides.

use std::path::PathBuf;

use toml::{Table, Value};

use crate::agents::RunConfig;
use crate::error::{Error, Result};

/// Environment variable read when neither the file nor the command line sets a seed.
pub const SEED_ENV: &str = "ACCELPO_SEED";

/// Keys accepted in a run file besides the [`RunConfig`] fields.
pub const FILE_KEYS: [&str; 2] = ["out", "map"];

/// A parsed run file.
#[derive(Clone, Debug, PartialEq)]
pub struct RunFile {
    pub config: RunConfig,
    /// Where to write the trace CSV.
    pub out: Option<PathBuf>,
    /// Maze map to run on instead of the bundled one.
    pub map: Option<PathBuf>,
    /// The file set `seed` explicitly.
    pub has_seed: bool,
}

/// Every key a [`RunConfig`] understands, in declaration order.
pub fn config_keys() -> Vec<String> {
    to_table(&RunConfig::default()).keys().cloned().collect()
}

fn to_table(cfg: &RunConfig) -> Table {
    Table::try_from(cfg).expect("RunConfig serializes to a table")
}

fn from_table(table: Table) -> Result<RunConfig> {
    table
        .try_into()
        .map_err(|e: toml::de::Error| Error::InvalidConfig(e.message().to_string()))
}

/// Overlay `entries` on `base`, rejecting every key that is not a config field.
pub fn merge(base: &RunConfig, entries: &Table) -> Result<RunConfig> {
    let mut table = to_table(base);
    let unknown: Vec<String> = entries
        .keys()
        .filter(|k| !table.contains_key(k.as_str()))
        .cloned()
        .collect();
    if !unknown.is_empty() {
        return Err(Error::UnknownKeys(unknown));
    }
    for (k, v) in entries {
        table.insert(k.clone(), v.clone());
    }
    from_table(table)
}

pub fn parse_run_file(text: &str) -> Result<RunFile> {
    let mut table: Table = text
        .parse()
        .map_err(|e: toml::de::Error| Error::InvalidConfig(e.message().to_string()))?;
    let path_value = |v: Value, key: &str| match v {
        Value::String(s) => Ok(PathBuf::from(s)),
        other => Err(Error::InvalidConfig(format!("{key} must be a string, got {other}"))),
    };
    let out = table.remove("out").map(|v| path_value(v, "out")).transpose()?;
    let map = table.remove("map").map(|v| path_value(v, "map")).transpose()?;
    let has_seed = table.contains_key("seed");
    let config = merge(&RunConfig::default(), &table)?;
    Ok(RunFile {
        config,
        out,
        map,
        has_seed,
    })
}

/// Interpret a command-line value: anything that parses as a TOML value is
/// taken as such, everything else as a bare string.
pub fn parse_value(raw: &str) -> Value {
    format!("v = {raw}")
        .parse::<Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| Value::String(raw.to_string()))
}

/// Split `key=value`.
pub fn parse_assignment(s: &str) -> Result<(String, Value)> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| Error::InvalidConfig(format!("expected key=value, got {s:?}")))?;
    let key = k.trim();
    if key.is_empty() {
        return Err(Error::InvalidConfig(format!("empty key in {s:?}")));
    }
    Ok((key.to_string(), parse_value(v.trim())))
}

pub fn apply_overrides(base: &RunConfig, overrides: &[(String, Value)]) -> Result<RunConfig> {
    let mut table = Table::new();
    for (k, v) in overrides {
        table.insert(k.clone(), v.clone());
    }
    merge(base, &table)
}

/// Seed precedence: command line, then config file (or `--set`), then the
/// environment fallback, then the built-in default.
pub fn resolve_seed(cli: Option<u64>, configured: Option<u64>, env: Option<&str>) -> Result<Option<u64>> {
    if let Some(s) = cli.or(configured) {
        return Ok(Some(s));
    }
    match env {
        Some(raw) => raw
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| Error::InvalidConfig(format!("{SEED_ENV} must be an unsigned integer, got {raw:?}"))),
        None => Ok(None),
    }
}
