use std::path::Path;

use serde::{Deserialize, Serialize};

use super::InventoryError;

/// Use-phase conditions of a country.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountryProfile {
    pub country: String,
    /// Grid carbon intensity, g CO₂eq per kWh.
    #[serde(rename = "carbon_intensity_g_per_kwh")]
    pub carbon_intensity: f64,
    /// Horizontal irradiation coefficient in [0, 1].
    pub k_hi: f64,
    /// kWh per m² per year on the horizontal plane.
    #[serde(rename = "annual_insolation_kwh_m2_yr")]
    pub annual_insolation: f64,
    pub daily_light_hours: f64,
}

impl CountryProfile {
    pub fn validate(&self) -> Result<(), String> {
        if !(0.0..=1.0).contains(&self.k_hi) {
            return Err(format!("{}: k_hi {} outside [0, 1]", self.country, self.k_hi));
        }
        if !(self.carbon_intensity >= 0.0 && self.carbon_intensity.is_finite()) {
            return Err(format!(
                "{}: carbon intensity {} must be finite and non-negative",
                self.country, self.carbon_intensity
            ));
        }
        if !(self.annual_insolation >= 0.0 && self.annual_insolation.is_finite()) {
            return Err(format!("{}: annual insolation {}", self.country, self.annual_insolation));
        }
        if !(self.daily_light_hours > 0.0 && self.daily_light_hours <= 24.0) {
            return Err(format!(
                "{}: daily light hours {} outside (0, 24]",
                self.country, self.daily_light_hours
            ));
        }
        Ok(())
    }

    /// Carbon intensity in kg CO₂eq per kWh.
    pub fn carbon_intensity_kg_per_kwh(&self) -> f64 {
        self.carbon_intensity / 1000.0
    }

    /// Mean irradiance over daylight hours relative to 1 kW/m², the
    /// convention used to derive `k_hi` in the bundled table.
    pub fn daylight_irradiance_ratio(&self) -> f64 {
        self.annual_insolation / (365.0 * self.daily_light_hours)
    }
}

pub fn parse_country_profiles(text: &str) -> Result<Vec<CountryProfile>, InventoryError> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let mut out = Vec::new();
    for (i, record) in reader.deserialize::<CountryProfile>().enumerate() {
        let row = i + 1;
        let profile = record.map_err(|e| InventoryError::Country {
            row,
            message: e.to_string(),
        })?;
        profile
            .validate()
            .map_err(|message| InventoryError::Country { row, message })?;
        if out.iter().any(|p: &CountryProfile| p.country == profile.country) {
            return Err(InventoryError::Duplicate {
                kind: "country",
                id: profile.country,
            });
        }
        out.push(profile);
    }
    Ok(out)
}

pub fn load_country_profiles(path: impl AsRef<Path>) -> Result<Vec<CountryProfile>, InventoryError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| InventoryError::io(path, e))?;
    parse_country_profiles(&text)
}
