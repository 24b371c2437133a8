//! Scenario resolution: preset, then config file, then flags, then
//! `key=value` overrides.

use std::fs;
use std::path::Path;

use consensus_hmd::sim::ScenarioConfig;
use serde::de::DeserializeOwned;
use serde_json::{Map, Value};

use crate::error::{CliError, Result};

/// Short table symbols accepted in files and overrides.
const ALIASES: [(&str, &str); 4] = [
    ("T", "sampling_interval_min"),
    ("R_deg", "measurement_noise_deg"),
    ("n_s", "n_sensors"),
    ("n", "n_selected"),
];

fn canonical(key: &str) -> &str {
    ALIASES.iter().find(|(a, _)| *a == key).map(|(_, c)| *c).unwrap_or(key)
}

/// Reads a TOML or JSON file into a JSON value. `.json` files are parsed as
/// JSON; anything else as TOML.
pub fn read_structured(path: &Path) -> Result<Value> {
    if !path.exists() {
        return Err(CliError::Config(format!(
            "config file {} does not exist",
            path.display()
        )));
    }
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
    if is_json {
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    } else {
        toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }
}

pub fn parse_file<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let v = read_structured(path)?;
    serde_json::from_value(v).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn merge(base: &mut Value, patch: Value) {
    match (base, patch) {
        (Value::Object(b), Value::Object(p)) => {
            for (k, v) in p {
                let k = canonical(&k).to_string();
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

/// Parses an override value as a TOML literal, falling back to a bare string.
fn parse_value(raw: &str) -> Value {
    #[derive(serde::Deserialize)]
    struct Wrapper {
        v: Value,
    }
    toml::from_str::<Wrapper>(&format!("v = {raw}"))
        .map(|w| w.v)
        .unwrap_or_else(|_| Value::String(raw.to_string()))
}

/// Applies one `dotted.key=value` override.
pub fn apply_override(config: &mut Value, spec: &str) -> Result<()> {
    let (key, raw) = spec
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("override {spec:?} is not key=value")))?;
    let key = key.trim();
    if key.is_empty() {
        return Err(CliError::Config(format!("override {spec:?} has an empty key")));
    }
    let mut slot = config;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let obj = slot
            .as_object_mut()
            .ok_or_else(|| CliError::Config(format!("override {key:?}: {part:?} is not a table")))?;
        let part = canonical(part);
        if i + 1 == parts.len() {
            obj.insert(part.to_string(), parse_value(raw.trim()));
            return Ok(());
        }
        slot = obj.entry(part.to_string()).or_insert_with(|| Value::Object(Map::new()));
    }
    unreachable!("split yields at least one part")
}

fn preset(name: &str) -> Result<ScenarioConfig> {
    match name {
        "cv" | "1" | "scenario1" => Ok(ScenarioConfig::scenario1()),
        "ct" | "2" | "scenario2" => Ok(ScenarioConfig::scenario2()),
        other => Err(CliError::Config(format!(
            "unknown scenario {other:?}; expected cv or ct"
        ))),
    }
}

/// Builds the resolved configuration. `flags` are overrides generated from
/// command-line options and applied before the user's `--override` list.
pub fn resolve(
    path: Option<&Path>,
    scenario: Option<&str>,
    flags: &[String],
    overrides: &[String],
) -> Result<ScenarioConfig> {
    let file = path.map(read_structured).transpose()?;
    let from_file = file
        .as_ref()
        .and_then(|v| v.get("scenario"))
        .and_then(Value::as_str)
        .map(str::to_string);
    let name = scenario
        .map(str::to_string)
        .or(from_file)
        .unwrap_or_else(|| "cv".into());
    let mut value = serde_json::to_value(preset(&name)?).expect("config serializes");
    if let Some(f) = file {
        if !f.is_object() {
            return Err(CliError::Config("config file must be a table".into()));
        }
        merge(&mut value, f);
    }
    if scenario.is_some() {
        // An explicit flag wins over the file's scenario key.
        apply_override(&mut value, &format!("scenario=\"{}\"", canonical_scenario(&name)))?;
    }
    for o in flags.iter().chain(overrides) {
        apply_override(&mut value, o)?;
    }
    let cfg: ScenarioConfig = serde_json::from_value(value).map_err(|e| CliError::Config(format!("config: {e}")))?;
    cfg.validate()?;
    Ok(cfg)
}

fn canonical_scenario(name: &str) -> &'static str {
    match name {
        "ct" | "2" | "scenario2" => "ct",
        _ => "cv",
    }
}
