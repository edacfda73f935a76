//! Run configuration: defaults, then a config file overlay, then flags.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use vipv_core::comparator::{ModelSetup, PanelArea, DEFAULT_LIFETIME_KM};

use crate::error::CliError;

/// Input files; `None` selects the bundled data.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Inputs {
    pub inventory: Option<String>,
    pub method: Option<String>,
    pub countries: Option<String>,
    pub cycle: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    /// Country of use, looked up in the country table.
    pub country: String,
    /// Overrides the country's irradiation coefficient.
    pub k_hi: Option<f64>,
    pub lifetime_km: f64,
    pub panel_area: PanelArea,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            country: "NL".into(),
            k_hi: None,
            lifetime_km: DEFAULT_LIFETIME_KM,
            panel_area: PanelArea::OPTIMAL,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub areas: Vec<f64>,
    pub lifetimes: Vec<f64>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            areas: parse_range("0:3:0.5").expect("valid default"),
            lifetimes: parse_range("0:300000:25000").expect("valid default"),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DesignConfig {
    /// Battery-electric baseline: no panel.
    pub bev: bool,
}

/// Fully resolved configuration, embedded in every output.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub inputs: Inputs,
    /// Production region per stage; unlisted stages keep the inventory's location.
    pub production: BTreeMap<String, String>,
    pub model: ModelSetup,
    pub scenario: ScenarioConfig,
    pub design: DesignConfig,
    pub sweep: SweepConfig,
}

/// Overlays `overlay` onto `base`; objects merge key by key, anything else replaces.
fn merge(base: &mut Value, overlay: Value) {
    match (base, overlay) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
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

/// Reads a config overlay. Accepts TOML, JSON, a JSON output of this tool
/// (its embedded config), or a CSV output (its `# config:` line).
pub fn read_overlay(path: &Path) -> Result<Value, CliError> {
    let text =
        std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let bad = |e: String| CliError::Input(format!("{}: {e}", path.display()));
    let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("");
    let value: Value = match ext {
        "toml" => toml::from_str(&text).map_err(|e| bad(e.to_string()))?,
        "csv" => {
            let line = text
                .lines()
                .find_map(|l| l.strip_prefix(crate::provenance::CSV_CONFIG_PREFIX))
                .ok_or_else(|| bad("no embedded config line".into()))?;
            serde_json::from_str(line).map_err(|e| bad(e.to_string()))?
        }
        _ => serde_json::from_str(&text).map_err(|e| bad(e.to_string()))?,
    };
    Ok(match value {
        Value::Object(mut map) if map.contains_key("provenance") => map
            .remove("provenance")
            .and_then(|mut p| p.get_mut("config").map(Value::take))
            .ok_or_else(|| bad("provenance block has no config".into()))?,
        other => other,
    })
}

impl RunConfig {
    pub fn resolve(overlay: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = overlay else {
            return Ok(RunConfig::default());
        };
        let mut base = serde_json::to_value(RunConfig::default()).expect("config serializes");
        merge(&mut base, read_overlay(path)?);
        serde_json::from_value(base).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
    }
}

/// Parses `start:stop:step` into an inclusive, evenly spaced list.
pub fn parse_range(text: &str) -> Result<Vec<f64>, String> {
    let parts: Vec<&str> = text.split(':').collect();
    let nums = parts
        .iter()
        .map(|p| p.trim().parse::<f64>().map_err(|_| format!("'{p}' is not a number in range '{text}'")))
        .collect::<Result<Vec<_>, _>>()?;
    match nums.as_slice() {
        [single] => Ok(vec![*single]),
        [start, stop, step] => {
            if step.is_nan() || *step <= 0.0 || stop < start || !start.is_finite() || !stop.is_finite() {
                return Err(format!("range '{text}' needs start ≤ stop and a positive step"));
            }
            let n = ((stop - start) / step + 1e-9).floor() as usize + 1;
            Ok((0..n).map(|i| start + step * i as f64).collect())
        }
        _ => Err(format!("range '{text}' must be 'start:stop:step' or a single value")),
    }
}

/// Parses `STAGE=REGION`.
pub fn parse_stage(text: &str) -> Result<(String, String), String> {
    match text.split_once('=') {
        Some((s, r)) if !s.trim().is_empty() && !r.trim().is_empty() => {
            Ok((s.trim().to_string(), r.trim().to_string()))
        }
        _ => Err(format!("'{text}' must be STAGE=REGION")),
    }
}

/// Parses `optimal` or an area in m².
pub fn parse_panel_area(text: &str) -> Result<PanelArea, String> {
    if text.eq_ignore_ascii_case("optimal") {
        return Ok(PanelArea::OPTIMAL);
    }
    text.parse::<f64>()
        .map(PanelArea::Fixed)
        .map_err(|_| format!("'{text}' must be 'optimal' or an area in m²"))
}
