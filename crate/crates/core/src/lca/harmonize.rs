//! Conversion of per-area manufacturing impact to per-energy figures.
//!
//! Result unit is g CO₂eq per kWh produced over the panel lifetime
//! (numerically equal to kg CO₂eq per MWh).

use serde::{Deserialize, Serialize};

use super::LcaError;
use crate::inventory::CountryProfile;

/// Irradiance at standard test conditions, W/m².
pub const STC_IRRADIANCE: f64 = 1000.0;

/// Module efficiency implied by a rated power density in W/m².
pub fn module_efficiency(power_density_w_per_m2: f64) -> f64 {
    power_density_w_per_m2 / STC_IRRADIANCE
}

/// I_p / (H · PR · η · lifetime), converted to g CO₂eq/kWh.
pub fn harmonize_per_kwh(
    impact_kg_per_m2: f64,
    power_density_w_per_m2: f64,
    profile: &CountryProfile,
    performance_ratio: f64,
    lifetime_years: f64,
) -> Result<f64, LcaError> {
    let positive = |name: &str, v: f64| {
        if v > 0.0 && v.is_finite() {
            Ok(())
        } else {
            Err(LcaError::Harmonization(format!("{name} must be positive, got {v}")))
        }
    };
    positive("annual insolation", profile.annual_insolation)?;
    positive("lifetime", lifetime_years)?;
    positive("performance ratio", performance_ratio)?;
    positive("power density", power_density_w_per_m2)?;
    if !(impact_kg_per_m2 >= 0.0 && impact_kg_per_m2.is_finite()) {
        return Err(LcaError::Harmonization(format!(
            "impact must be finite and non-negative, got {impact_kg_per_m2}"
        )));
    }
    let lifetime_kwh_per_m2 = profile.annual_insolation
        * performance_ratio
        * module_efficiency(power_density_w_per_m2)
        * lifetime_years;
    Ok(impact_kg_per_m2 * 1000.0 / lifetime_kwh_per_m2)
}

/// Reference conditions for harmonization, shipped as a data file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HarmonizationParams {
    /// Horizontal insolation of the reference site, kWh/m²/yr.
    pub annual_insolation_kwh_m2_yr: f64,
    pub performance_ratio: f64,
    pub lifetime_years: f64,
    /// External per-kWh value the harmonized figure is compared with.
    pub reference_g_per_kwh: f64,
    #[serde(default)]
    pub notes: Vec<String>,
}

impl HarmonizationParams {
    pub fn parse(text: &str) -> Result<Self, LcaError> {
        toml::from_str(text).map_err(|e| LcaError::Harmonization(e.message().to_string()))
    }

    pub fn bundled() -> Self {
        Self::parse(crate::data::HARMONIZATION).expect("bundled harmonization file parses")
    }

    pub fn reference_profile(&self) -> CountryProfile {
        CountryProfile {
            country: "reference".into(),
            carbon_intensity: 0.0,
            k_hi: 0.0,
            annual_insolation: self.annual_insolation_kwh_m2_yr,
            daily_light_hours: 12.0,
        }
    }

    pub fn harmonize(&self, impact_kg_per_m2: f64, power_density_w_per_m2: f64) -> Result<f64, LcaError> {
        harmonize_per_kwh(
            impact_kg_per_m2,
            power_density_w_per_m2,
            &self.reference_profile(),
            self.performance_ratio,
            self.lifetime_years,
        )
    }

    /// Relative gap of a harmonized value below the reference value.
    pub fn gap_to_reference(&self, harmonized: f64) -> f64 {
        (self.reference_g_per_kwh - harmonized) / self.reference_g_per_kwh
    }
}
