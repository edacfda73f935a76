use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::format::parse_decimal;
use super::InventoryError;

/// Substance id of fossil carbon dioxide, the reference substance of GWP.
pub const CO2_SUBSTANCE_ID: &str = "co2";

/// Midpoint characterization factors, kg CO₂eq per kg of substance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CharacterizationMethod {
    pub name: String,
    pub factors: BTreeMap<String, f64>,
}

impl CharacterizationMethod {
    pub fn new(name: impl Into<String>, factors: BTreeMap<String, f64>) -> Result<Self, InventoryError> {
        let method = CharacterizationMethod {
            name: name.into(),
            factors,
        };
        method.validate()?;
        Ok(method)
    }

    pub fn validate(&self) -> Result<(), InventoryError> {
        match self.factors.get(CO2_SUBSTANCE_ID) {
            Some(f) if *f == 1.0 => {}
            Some(f) => {
                return Err(InventoryError::Method(format!(
                    "factor for '{CO2_SUBSTANCE_ID}' must be exactly 1, got {f}"
                )))
            }
            None => {
                return Err(InventoryError::Method(format!(
                    "no factor for reference substance '{CO2_SUBSTANCE_ID}'"
                )))
            }
        }
        if let Some((id, f)) = self.factors.iter().find(|(_, f)| !f.is_finite()) {
            return Err(InventoryError::Method(format!("factor for '{id}' is {f}")));
        }
        Ok(())
    }

    pub fn factor(&self, substance: &str) -> Option<f64> {
        self.factors.get(substance).copied()
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMethod {
    #[serde(default = "default_name")]
    name: String,
    #[serde(default)]
    #[allow(dead_code)]
    notes: Vec<String>,
    factors: BTreeMap<String, String>,
}

fn default_name() -> String {
    "GWP100-midpoint".to_string()
}

pub fn parse_method(text: &str) -> Result<CharacterizationMethod, InventoryError> {
    let raw: RawMethod = toml::from_str(text).map_err(|e| InventoryError::Method(e.message().to_string()))?;
    let mut factors = BTreeMap::new();
    for (id, value) in raw.factors {
        let f = parse_decimal(&value, || format!("characterization factor '{id}'"))?;
        factors.insert(id, f);
    }
    CharacterizationMethod::new(raw.name, factors)
}

pub fn load_method(path: impl AsRef<Path>) -> Result<CharacterizationMethod, InventoryError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| InventoryError::io(path, e))?;
    parse_method(&text)
}
