//! VIPV versus battery-electric life-cycle comparison.
//!
//! Total emissions are manufacturing (panel only) plus operation:
//! `I = I_p + F·c·L`. Lifetimes are in km, consumption in kWh/km and
//! carbon intensity in g CO₂eq/kWh unless a name says otherwise.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::inventory::{CharacterizationMethod, CountryProfile, ProcessGraph};
use crate::lca::{assess, LcaError};
use crate::powertrain::{design, CellSpec, DesignResult, DriveCycle, PerformanceReqs, PowertrainError, VehicleParams};

pub const DEFAULT_LIFETIME_KM: f64 = 150_000.0;

#[derive(Debug, Error)]
pub enum ComparatorError {
    #[error(transparent)]
    Lca(#[from] LcaError),
    #[error(transparent)]
    Powertrain(#[from] PowertrainError),
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
}

impl ComparatorError {
    pub fn is_input_error(&self) -> bool {
        match self {
            ComparatorError::Lca(LcaError::Inventory(_)) | ComparatorError::InvalidScenario(_) => true,
            ComparatorError::Powertrain(e) => e.is_input_error(),
            _ => false,
        }
    }
}

/// Operational emissions `F·c·L` in kg CO₂eq for `F` in kWh/km, `c` in g/kWh
/// and `L` in km.
pub fn operations_emissions(f_kwh_per_km: f64, c_g_per_kwh: f64, lifetime_km: f64) -> f64 {
    f_kwh_per_km * (c_g_per_kwh / 1000.0) * lifetime_km
}

/// Lifetime after which the panel has paid back its manufacturing emissions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Breakeven {
    Km(f64),
    Never,
}

impl Breakeven {
    pub fn km(self) -> Option<f64> {
        match self {
            Breakeven::Km(km) => Some(km),
            Breakeven::Never => None,
        }
    }
}

impl std::fmt::Display for Breakeven {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Breakeven::Km(km) => write!(f, "{km}"),
            Breakeven::Never => f.write_str("never"),
        }
    }
}

/// `L* = I_p / ((F_bev − F_vipv)·c)` for `c` in kg/kWh; never without savings.
pub fn breakeven_lifetime(i_p_kg: f64, f_bev_kwh_per_km: f64, f_vipv_kwh_per_km: f64, c_kg_per_kwh: f64) -> Breakeven {
    let savings = (f_bev_kwh_per_km - f_vipv_kwh_per_km) * c_kg_per_kwh;
    if savings > 0.0 {
        Breakeven::Km(i_p_kg / savings)
    } else {
        Breakeven::Never
    }
}

/// Installed panel area of the solar vehicle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PanelArea {
    /// Chosen by the design optimization.
    Optimal(OptimalTag),
    /// Pinned area in m².
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimalTag {
    Optimal,
}

impl PanelArea {
    pub const OPTIMAL: PanelArea = PanelArea::Optimal(OptimalTag::Optimal);

    pub fn fixed_cells(&self, cell: &CellSpec) -> Option<f64> {
        match self {
            PanelArea::Optimal(_) => None,
            PanelArea::Fixed(area) => Some(area / cell.area_m2),
        }
    }
}

impl Default for PanelArea {
    fn default() -> Self {
        PanelArea::OPTIMAL
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    /// Region per production stage; unlisted stages keep the inventory's location.
    pub production_locations: BTreeMap<String, String>,
    pub use_country: CountryProfile,
    pub lifetime_km: f64,
    pub panel_area: PanelArea,
}

impl Scenario {
    pub fn new(use_country: CountryProfile) -> Self {
        Scenario {
            production_locations: BTreeMap::new(),
            use_country,
            lifetime_km: DEFAULT_LIFETIME_KM,
            panel_area: PanelArea::OPTIMAL,
        }
    }

    pub fn validate(&self, params: &VehicleParams) -> Result<(), ComparatorError> {
        if !(self.lifetime_km > 0.0 && self.lifetime_km.is_finite()) {
            return Err(ComparatorError::InvalidScenario(format!(
                "lifetime {} km must be positive",
                self.lifetime_km
            )));
        }
        if let PanelArea::Fixed(a) = self.panel_area {
            if !(a >= 0.0 && a <= params.available_area_m2) {
                return Err(ComparatorError::InvalidScenario(format!(
                    "panel area {a} m² outside [0, {}]",
                    params.available_area_m2
                )));
            }
        }
        self.use_country
            .validate()
            .map_err(ComparatorError::InvalidScenario)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonResult {
    pub country: String,
    pub lifetime_km: f64,
    pub panel_area_m2: f64,
    /// Cradle-to-gate impact per m² of panel.
    pub panel_impact_kg_per_m2: f64,
    pub i_p_kg: f64,
    pub i_o_vipv_kg: f64,
    pub i_o_bev_kg: f64,
    /// `(I_p + I_o_vipv) − I_o_bev`.
    pub delta_kg: f64,
    /// `delta / I_o_bev`; absent when the baseline emits nothing.
    pub relative_delta: Option<f64>,
    pub breakeven: Breakeven,
    /// Consumption used for operation emissions, kWh/km.
    pub f_vipv_kwh_per_km: f64,
    pub f_bev_kwh_per_km: f64,
}

/// Shared model inputs for every comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSetup {
    pub params: VehicleParams,
    pub cell: CellSpec,
    pub reqs: PerformanceReqs,
    /// Grid-to-battery efficiency; 1 accounts consumption at the battery terminals.
    pub charger_efficiency: f64,
}

impl Default for ModelSetup {
    fn default() -> Self {
        ModelSetup {
            params: VehicleParams::default(),
            cell: CellSpec::default(),
            reqs: PerformanceReqs::default(),
            charger_efficiency: 1.0,
        }
    }
}

/// Runs comparisons against one inventory and one drive cycle. The
/// battery-electric baseline does not depend on the country and is solved once.
pub struct Comparator<'a> {
    graph: &'a ProcessGraph,
    method: &'a CharacterizationMethod,
    cycle: &'a DriveCycle,
    setup: ModelSetup,
    bev: OnceLock<DesignResult>,
}

impl<'a> Comparator<'a> {
    pub fn new(
        graph: &'a ProcessGraph,
        method: &'a CharacterizationMethod,
        cycle: &'a DriveCycle,
        setup: ModelSetup,
    ) -> Result<Self, ComparatorError> {
        if !(setup.charger_efficiency > 0.0 && setup.charger_efficiency <= 1.0) {
            return Err(ComparatorError::InvalidScenario(format!(
                "charger efficiency {} outside (0, 1]",
                setup.charger_efficiency
            )));
        }
        setup.params.validate()?;
        setup.cell.validate()?;
        setup.reqs.validate()?;
        Ok(Comparator {
            graph,
            method,
            cycle,
            setup,
            bev: OnceLock::new(),
        })
    }

    pub fn setup(&self) -> &ModelSetup {
        &self.setup
    }

    pub fn bev_design(&self) -> Result<&DesignResult, ComparatorError> {
        if let Some(r) = self.bev.get() {
            return Ok(r);
        }
        let r = self.solve(0.0, Some(0.0))?;
        Ok(self.bev.get_or_init(|| r))
    }

    pub fn vipv_design(&self, k_hi: f64, area: PanelArea) -> Result<DesignResult, ComparatorError> {
        match area.fixed_cells(&self.setup.cell) {
            Some(0.0) => Ok(self.bev_design()?.clone()),
            fixed => self.solve(k_hi, fixed),
        }
    }

    fn solve(&self, k_hi: f64, fixed: Option<f64>) -> Result<DesignResult, ComparatorError> {
        let s = &self.setup;
        Ok(design(self.cycle, &s.params, &s.cell, &s.reqs, k_hi, fixed)?)
    }

    /// Cradle-to-gate impact of one m² for the given production locations.
    pub fn panel_impact(&self, production_locations: &BTreeMap<String, String>) -> Result<f64, ComparatorError> {
        Ok(assess(self.graph, production_locations, self.method)?.total_kg_co2eq)
    }

    pub fn compare(&self, scenario: &Scenario) -> Result<ComparisonResult, ComparatorError> {
        scenario.validate(&self.setup.params)?;
        let per_m2 = self.panel_impact(&scenario.production_locations)?;
        let vipv = self.vipv_design(scenario.use_country.k_hi, scenario.panel_area)?;
        let bev = self.bev_design()?;
        Ok(self.evaluate(per_m2, &vipv, bev, &scenario.use_country, scenario.lifetime_km))
    }

    fn evaluate(
        &self,
        per_m2: f64,
        vipv: &DesignResult,
        bev: &DesignResult,
        country: &CountryProfile,
        lifetime_km: f64,
    ) -> ComparisonResult {
        let eta = self.setup.charger_efficiency;
        let f_vipv = vipv.f_v_kwh_per_km / eta;
        let f_bev = bev.f_v_kwh_per_km / eta;
        let c = country.carbon_intensity;
        let i_p = per_m2 * vipv.panel_area_m2;
        let i_o_vipv = operations_emissions(f_vipv, c, lifetime_km);
        let i_o_bev = operations_emissions(f_bev, c, lifetime_km);
        let delta = (i_p + i_o_vipv) - i_o_bev;
        ComparisonResult {
            country: country.country.clone(),
            lifetime_km,
            panel_area_m2: vipv.panel_area_m2,
            panel_impact_kg_per_m2: per_m2,
            i_p_kg: i_p,
            i_o_vipv_kg: i_o_vipv,
            i_o_bev_kg: i_o_bev,
            delta_kg: delta,
            relative_delta: (i_o_bev != 0.0).then(|| delta / i_o_bev),
            breakeven: breakeven_lifetime(i_p, f_bev, f_vipv, country.carbon_intensity_kg_per_kwh()),
            f_vipv_kwh_per_km: f_vipv,
            f_bev_kwh_per_km: f_bev,
        }
    }

    /// Relative delta over a grid of fixed panel areas and lifetimes.
    pub fn sweep(&self, template: &Scenario, areas: &[f64], lifetimes: &[f64]) -> Result<SweepResult, ComparatorError> {
        if areas.is_empty() || lifetimes.is_empty() {
            return Err(ComparatorError::InvalidScenario("sweep axes must not be empty".into()));
        }
        for &area in areas {
            Scenario {
                panel_area: PanelArea::Fixed(area),
                ..template.clone()
            }
            .validate(&self.setup.params)?;
        }
        for &l in lifetimes {
            Scenario {
                lifetime_km: l.max(f64::MIN_POSITIVE),
                ..template.clone()
            }
            .validate(&self.setup.params)
            .map_err(|_| ComparatorError::InvalidScenario(format!("lifetime {l} km must be finite and ≥ 0")))?;
        }
        let per_m2 = self.panel_impact(&template.production_locations)?;
        let bev = self.bev_design()?;
        let k_hi = template.use_country.k_hi;
        let designs: Vec<DesignResult> = areas
            .par_iter()
            .map(|&a| self.vipv_design(k_hi, PanelArea::Fixed(a)))
            .collect::<Result<_, _>>()?;
        let cells: Vec<Vec<ComparisonResult>> = designs
            .iter()
            .map(|vipv| {
                lifetimes
                    .iter()
                    .map(|&l| self.evaluate(per_m2, vipv, bev, &template.use_country, l))
                    .collect()
            })
            .collect();
        let tipping = designs
            .iter()
            .map(|vipv| self.evaluate(per_m2, vipv, bev, &template.use_country, 1.0).breakeven)
            .collect();
        Ok(SweepResult {
            areas: areas.to_vec(),
            lifetimes: lifetimes.to_vec(),
            cells,
            tipping,
        })
    }

    /// One comparison per country with the shared production scenario.
    pub fn country_map(
        &self,
        template: &Scenario,
        countries: &[CountryProfile],
        lifetime_km: f64,
    ) -> Result<Vec<ComparisonResult>, ComparatorError> {
        self.bev_design()?;
        countries
            .par_iter()
            .map(|c| {
                self.compare(&Scenario {
                    use_country: c.clone(),
                    lifetime_km,
                    ..template.clone()
                })
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub areas: Vec<f64>,
    pub lifetimes: Vec<f64>,
    /// `cells[i][j]` for `areas[i]` and `lifetimes[j]`.
    pub cells: Vec<Vec<ComparisonResult>>,
    /// Break-even lifetime per area.
    pub tipping: Vec<Breakeven>,
}

impl SweepResult {
    pub fn relative_delta(&self, area: usize, lifetime: usize) -> Option<f64> {
        self.cells[area][lifetime].relative_delta
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn operations_examples() {
        assert!((operations_emissions(0.15, 400.0, 150_000.0) - 9000.0).abs() < 1e-9);
        assert_eq!(operations_emissions(0.15, 0.0, 150_000.0), 0.0);
        assert_eq!(
            operations_emissions(0.15, 400.0, 300_000.0),
            2.0 * operations_emissions(0.15, 400.0, 150_000.0)
        );
    }

    #[test]
    fn breakeven_examples() {
        let l = breakeven_lifetime(354.0, 0.154, 0.150, 0.4).km().unwrap();
        assert!((l - 221_250.0).abs() < 1e-6, "{l}");
        assert_eq!(breakeven_lifetime(0.0, 0.154, 0.150, 0.4), Breakeven::Km(0.0));
        assert_eq!(breakeven_lifetime(354.0, 0.15, 0.15, 0.4), Breakeven::Never);
        assert_eq!(breakeven_lifetime(354.0, 0.15, 0.16, 0.4), Breakeven::Never);
    }

    #[test]
    fn panel_area_serde() {
        let a: PanelArea = serde_json::from_str("\"optimal\"").unwrap();
        assert_eq!(a, PanelArea::OPTIMAL);
        let a: PanelArea = serde_json::from_str("1.5").unwrap();
        assert_eq!(a, PanelArea::Fixed(1.5));
        assert_eq!(serde_json::to_string(&PanelArea::OPTIMAL).unwrap(), "\"optimal\"");
    }
}
