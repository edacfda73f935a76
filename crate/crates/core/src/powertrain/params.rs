use serde::{Deserialize, Serialize};

use super::PowertrainError;

/// Mono-crystalline silicon cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CellSpec {
    pub mass_kg: f64,
    /// Peak power at standard test conditions, W.
    pub peak_power_w: f64,
    pub area_m2: f64,
}

impl Default for CellSpec {
    fn default() -> Self {
        CellSpec {
            mass_kg: 0.28,
            peak_power_w: 4.88,
            area_m2: 0.0243,
        }
    }
}

impl CellSpec {
    /// Rated power per unit area, W/m².
    pub fn power_density(&self) -> f64 {
        self.peak_power_w / self.area_m2
    }

    pub fn cells_for_area(&self, area_m2: f64) -> f64 {
        area_m2 / self.area_m2
    }

    pub fn validate(&self) -> Result<(), PowertrainError> {
        positive("cell mass", self.mass_kg, true)?;
        positive("cell peak power", self.peak_power_w, false)?;
        positive("cell area", self.area_m2, false)
    }
}

/// Vehicle and component model constants.
///
/// Glider, driver, available area and inverter efficiency are the reference
/// city-car values. Everything else is a reconstruction of the component
/// models and can be overridden.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VehicleParams {
    pub glider_mass_kg: f64,
    pub driver_mass_kg: f64,
    pub payload_mass_kg: f64,
    /// Roof/body area available for cells, m².
    pub available_area_m2: f64,
    pub inverter_efficiency: f64,

    /// Mass of the reference motor (including power electronics), kg.
    pub motor_ref_mass_kg: f64,
    /// Peak power of the reference motor, W.
    pub motor_ref_power_w: f64,
    /// Quadratic loss coefficient: loss = k · P² / P_max.
    pub motor_loss_coeff: f64,
    /// Speed-dependent no-load loss while the vehicle moves, as a fraction of
    /// motor peak power.
    pub motor_idle_loss_fraction: f64,

    pub battery_ref_mass_kg: f64,
    /// Nominal energy of the reference battery, J.
    pub battery_ref_energy_j: f64,
    pub battery_usable_fraction: f64,

    pub drag_coefficient: f64,
    pub frontal_area_m2: f64,
    pub air_density: f64,
    pub rolling_coefficient: f64,
    pub gravity: f64,
    /// Single-speed transmission efficiency.
    pub drivetrain_efficiency: f64,

    /// Margin on the kinetic-energy power bound used for acceleration. The
    /// default is the smallest round value for which the full-throttle check
    /// meets the acceleration requirement at the optimum.
    pub accel_power_margin: f64,
    /// Tyre-road friction coefficient for the full-throttle check.
    pub tire_adhesion: f64,
}

impl Default for VehicleParams {
    fn default() -> Self {
        VehicleParams {
            glider_mass_kg: 850.0,
            driver_mass_kg: 85.0,
            payload_mass_kg: 0.0,
            available_area_m2: 3.0,
            inverter_efficiency: 0.96,
            motor_ref_mass_kg: 35.0,
            motor_ref_power_w: 50_000.0,
            motor_loss_coeff: 0.1,
            motor_idle_loss_fraction: 0.01,
            battery_ref_mass_kg: 70.0,
            battery_ref_energy_j: 36.0e6,
            battery_usable_fraction: 0.9,
            drag_coefficient: 0.30,
            frontal_area_m2: 2.1,
            air_density: 1.2,
            rolling_coefficient: 0.009,
            gravity: 9.81,
            drivetrain_efficiency: 0.97,
            accel_power_margin: 1.25,
            tire_adhesion: 0.9,
        }
    }
}

impl VehicleParams {
    pub fn validate(&self) -> Result<(), PowertrainError> {
        positive("glider mass", self.glider_mass_kg, true)?;
        positive("driver mass", self.driver_mass_kg, true)?;
        positive("payload mass", self.payload_mass_kg, true)?;
        positive("available area", self.available_area_m2, true)?;
        efficiency("inverter efficiency", self.inverter_efficiency)?;
        positive("motor reference mass", self.motor_ref_mass_kg, true)?;
        positive("motor reference power", self.motor_ref_power_w, false)?;
        positive("motor loss coefficient", self.motor_loss_coeff, false)?;
        positive("motor idle loss", self.motor_idle_loss_fraction, true)?;
        positive("battery reference mass", self.battery_ref_mass_kg, true)?;
        positive("battery reference energy", self.battery_ref_energy_j, false)?;
        efficiency("battery usable fraction", self.battery_usable_fraction)?;
        positive("drag coefficient", self.drag_coefficient, true)?;
        positive("frontal area", self.frontal_area_m2, true)?;
        positive("air density", self.air_density, true)?;
        positive("rolling coefficient", self.rolling_coefficient, true)?;
        positive("gravity", self.gravity, false)?;
        efficiency("drivetrain efficiency", self.drivetrain_efficiency)?;
        positive("acceleration margin", self.accel_power_margin, false)?;
        positive("tyre adhesion", self.tire_adhesion, false)
    }

    pub fn base_mass(&self) -> f64 {
        self.glider_mass_kg + self.driver_mass_kg + self.payload_mass_kg
    }

    /// Mass-proportional part of wheel power at speed `v` and acceleration `a`, W/kg.
    pub fn wheel_power_per_kg(&self, v: f64, a: f64) -> f64 {
        (a + self.rolling_coefficient * self.gravity) * v
    }

    /// Aerodynamic wheel power at speed `v`, W.
    pub fn aero_power(&self, v: f64) -> f64 {
        0.5 * self.air_density * self.drag_coefficient * self.frontal_area_m2 * v * v * v
    }

    /// Wheel power of a vehicle of mass `m`, W.
    pub fn wheel_power(&self, mass: f64, v: f64, a: f64) -> f64 {
        mass * self.wheel_power_per_kg(v, a) + self.aero_power(v)
    }
}

/// Minimum performance the design must meet.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PerformanceReqs {
    pub min_range_m: f64,
    pub min_top_speed_mps: f64,
    /// Maximum 0 to `accel_target_mps` time, s.
    pub max_accel_time_s: f64,
    pub accel_target_mps: f64,
    pub aux_power_w: f64,
}

impl Default for PerformanceReqs {
    fn default() -> Self {
        PerformanceReqs {
            min_range_m: 200_000.0,
            min_top_speed_mps: 130.0 / 3.6,
            max_accel_time_s: 15.0,
            accel_target_mps: 100.0 / 3.6,
            aux_power_w: 500.0,
        }
    }
}

impl PerformanceReqs {
    pub fn validate(&self) -> Result<(), PowertrainError> {
        positive("range", self.min_range_m, false)?;
        positive("top speed", self.min_top_speed_mps, false)?;
        positive("acceleration time", self.max_accel_time_s, false)?;
        positive("acceleration target speed", self.accel_target_mps, false)?;
        positive("auxiliary power", self.aux_power_w, true)
    }
}

/// Sizing decision: motor and battery scale factors and number of cells.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DesignVars {
    pub motor_scale: f64,
    pub battery_scale: f64,
    /// Continuous number of cells.
    pub panel_cells: f64,
}

impl DesignVars {
    pub fn new(motor_scale: f64, battery_scale: f64, panel_cells: f64) -> Self {
        DesignVars {
            motor_scale,
            battery_scale,
            panel_cells,
        }
    }

    pub fn panel_area(&self, cell: &CellSpec) -> f64 {
        self.panel_cells * cell.area_m2
    }
}

/// P_p = S_p · P̄_c · k_HI, W.
pub fn panel_power(panel_cells: f64, cell: &CellSpec, k_hi: f64) -> f64 {
    panel_cells * cell.peak_power_w * k_hi
}

/// m = m_g + m_d + m_pl + m_m,o·S_m + m_b,o·S_b + m_c,o·S_p, kg.
pub fn vehicle_mass(vars: &DesignVars, params: &VehicleParams, cell: &CellSpec) -> f64 {
    params.base_mass()
        + params.motor_ref_mass_kg * vars.motor_scale
        + params.battery_ref_mass_kg * vars.battery_scale
        + cell.mass_kg * vars.panel_cells
}

pub(crate) fn positive(name: &str, v: f64, allow_zero: bool) -> Result<(), PowertrainError> {
    let ok = v.is_finite() && if allow_zero { v >= 0.0 } else { v > 0.0 };
    if ok {
        Ok(())
    } else {
        Err(PowertrainError::InvalidParameter(format!("{name} = {v}")))
    }
}

fn efficiency(name: &str, v: f64) -> Result<(), PowertrainError> {
    if v > 0.0 && v <= 1.0 {
        Ok(())
    } else {
        Err(PowertrainError::InvalidParameter(format!("{name} = {v}, expected (0, 1]")))
    }
}
