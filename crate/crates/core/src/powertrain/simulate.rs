use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::params::{panel_power, vehicle_mass, DesignVars};
use super::{CellSpec, DriveCycle, PerformanceReqs, PowertrainError, VehicleParams, FEASIBILITY_TOLERANCE};

/// Integration step of the full-throttle run, s.
const LAUNCH_DT: f64 = 1e-3;
/// Give up on the full-throttle run after this long, s.
const LAUNCH_TIMEOUT: f64 = 120.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    MotorLimit { step: usize },
    TopSpeed,
    AccelerationPower,
    AccelerationTime { seconds: Option<f64> },
    Range,
    BatteryDepleted { step: usize },
    Area,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    /// Battery-terminal consumption over the cycle, J/m.
    pub f_v_j_per_m: f64,
    pub mass_kg: f64,
    /// Full-throttle time to the target speed, if reached.
    pub accel_time_s: Option<f64>,
    pub violations: Vec<Violation>,
}

impl SimulationReport {
    pub fn feasible(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Quasi-static simulation of a fixed sizing with the component models
/// applied as equalities.
pub fn forward_simulate(
    vars: &DesignVars,
    cycle: &DriveCycle,
    params: &VehicleParams,
    cell: &CellSpec,
    reqs: &PerformanceReqs,
    k_hi: f64,
) -> Result<SimulationReport, PowertrainError> {
    params.validate()?;
    cell.validate()?;
    reqs.validate()?;
    if !(0.0..=1.0).contains(&k_hi) {
        return Err(PowertrainError::InvalidParameter(format!("k_hi = {k_hi}, expected [0, 1]")));
    }
    for (name, v) in [
        ("motor scale", vars.motor_scale),
        ("battery scale", vars.battery_scale),
        ("panel cells", vars.panel_cells),
    ] {
        if !(v >= 0.0 && v.is_finite()) {
            return Err(PowertrainError::InvalidParameter(format!("{name} = {v}")));
        }
    }

    let tol = FEASIBILITY_TOLERANCE;
    let mass = vehicle_mass(vars, params, cell);
    let p_max = vars.motor_scale * params.motor_ref_power_w;
    let p_p = panel_power(vars.panel_cells, cell, k_hi);
    let eta_gb = params.drivetrain_efficiency;
    let eta_inv = params.inverter_efficiency;
    let usable = params.battery_usable_fraction * params.battery_ref_energy_j * vars.battery_scale;

    let mut violations = Vec::new();
    let mut energy = usable;
    let mut used = 0.0;
    let mut depleted = None;
    for k in 0..cycle.steps() {
        let v = cycle.speed[k];
        let wheel = params.wheel_power(mass, v, cycle.accel[k]);
        let required = (wheel / eta_gb).max(wheel * eta_gb);
        if required > p_max * (1.0 + tol) + tol {
            violations.push(Violation::MotorLimit { step: k });
        }
        // Friction brakes take whatever the motor cannot regenerate.
        let p_mech = required.clamp(-p_max, p_max.max(required));
        let loss = if p_max > 0.0 {
            params.motor_loss_coeff * p_mech * p_mech / p_max
        } else {
            0.0
        };
        let idle = if v > 0.0 {
            params.motor_idle_loss_fraction * p_max
        } else {
            0.0
        };
        let p_ac = p_mech + loss + idle;
        let bus = p_ac - p_p + reqs.aux_power_w;
        let p_b = (bus / eta_inv).max(bus * eta_inv);
        energy -= p_b * cycle.dt;
        used += p_b * cycle.dt;
        if depleted.is_none() && energy < -tol * usable.max(1.0) {
            depleted = Some(k);
        }
    }
    if let Some(step) = depleted {
        violations.push(Violation::BatteryDepleted { step });
    }
    let f_v = used / cycle.distance;

    if f_v * reqs.min_range_m > usable * (1.0 + tol) + tol {
        violations.push(Violation::Range);
    }
    let vt = reqs.min_top_speed_mps;
    if params.wheel_power(mass, vt, 0.0) > eta_gb * p_max * (1.0 + tol) + tol {
        violations.push(Violation::TopSpeed);
    }
    let va = reqs.accel_target_mps;
    let accel_bound = params.accel_power_margin * mass * va * va / (2.0 * reqs.max_accel_time_s);
    if accel_bound > p_max * (1.0 + tol) + tol {
        violations.push(Violation::AccelerationPower);
    }
    let accel_time = full_throttle_time(vars, params, cell, va);
    match accel_time {
        Some(t) if t <= reqs.max_accel_time_s * (1.0 + tol) => {}
        seconds => violations.push(Violation::AccelerationTime { seconds }),
    }
    if vars.panel_area(cell) > params.available_area_m2 * (1.0 + tol) + 1e-9 {
        violations.push(Violation::Area);
    }

    Ok(SimulationReport {
        f_v_j_per_m: f_v,
        mass_kg: mass,
        accel_time_s: accel_time,
        violations,
    })
}

/// Time to reach `target` m/s from standstill at full motor power, limited by
/// tyre adhesion at low speed. `None` if the target is never reached.
pub fn full_throttle_time(vars: &DesignVars, params: &VehicleParams, cell: &CellSpec, target: f64) -> Option<f64> {
    let mass = vehicle_mass(vars, params, cell);
    let wheel_power = params.drivetrain_efficiency * vars.motor_scale * params.motor_ref_power_w;
    let grip = params.tire_adhesion * mass * params.gravity;
    let resist = |v: f64| {
        mass * params.rolling_coefficient * params.gravity
            + 0.5 * params.air_density * params.drag_coefficient * params.frontal_area_m2 * v * v
    };
    let accel = |v: f64| {
        let traction = if v > 0.0 { (wheel_power / v).min(grip) } else { grip };
        (traction - resist(v)) / mass
    };
    let mut v = 0.0;
    let mut t = 0.0;
    while v < target {
        if t > LAUNCH_TIMEOUT {
            return None;
        }
        // Midpoint step.
        let a1 = accel(v);
        if a1 <= 0.0 {
            return None;
        }
        let a2 = accel(v + 0.5 * LAUNCH_DT * a1);
        let next = v + LAUNCH_DT * a2;
        if next >= target {
            return Some(t + LAUNCH_DT * (target - v) / (next - v));
        }
        v = next;
        t += LAUNCH_DT;
    }
    Some(t)
}

/// Axes of an exhaustive search over sizings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub motor: Vec<f64>,
    pub battery: Vec<f64>,
    pub panel: Vec<f64>,
}

impl GridSpec {
    /// `counts` points per axis spanning ±`rel` around `center`; the panel
    /// axis is clipped to `[0, panel_max]` and collapses to one point at zero.
    pub fn around(center: &DesignVars, rel: f64, counts: (usize, usize, usize), panel_max: f64) -> Self {
        let axis = |c: f64, n: usize, hi_cap: f64| {
            let lo = (c * (1.0 - rel)).max(0.0);
            let hi = (c * (1.0 + rel)).min(hi_cap);
            if n <= 1 || hi <= lo {
                return vec![lo.min(hi_cap)];
            }
            (0..n)
                .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
                .collect::<Vec<_>>()
        };
        GridSpec {
            motor: axis(center.motor_scale, counts.0, f64::INFINITY),
            battery: axis(center.battery_scale, counts.1, f64::INFINITY),
            panel: axis(center.panel_cells, counts.2, panel_max),
        }
    }

    pub fn len(&self) -> usize {
        self.motor.len() * self.battery.len() * self.panel.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn point(&self, i: usize) -> DesignVars {
        let nb = self.battery.len();
        let np = self.panel.len();
        DesignVars::new(self.motor[i / (nb * np)], self.battery[(i / np) % nb], self.panel[i % np])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridResult {
    pub vars: DesignVars,
    pub f_v_j_per_m: f64,
    pub evaluated: usize,
    pub feasible: usize,
}

/// Best feasible point of the grid by forward simulation.
pub fn grid_search_oracle(
    cycle: &DriveCycle,
    params: &VehicleParams,
    cell: &CellSpec,
    reqs: &PerformanceReqs,
    k_hi: f64,
    grid: &GridSpec,
) -> Result<GridResult, PowertrainError> {
    let reports: Vec<(DesignVars, SimulationReport)> = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let vars = grid.point(i);
            forward_simulate(&vars, cycle, params, cell, reqs, k_hi).map(|r| (vars, r))
        })
        .collect::<Result<_, _>>()?;
    let feasible = reports.iter().filter(|(_, r)| r.feasible()).count();
    // Ties resolve to the lowest grid index, independent of scheduling.
    let best = reports
        .iter()
        .filter(|(_, r)| r.feasible())
        .min_by(|a, b| a.1.f_v_j_per_m.total_cmp(&b.1.f_v_j_per_m))
        .ok_or(PowertrainError::EmptyFeasibleSet)?;
    Ok(GridResult {
        vars: best.0,
        f_v_j_per_m: best.1.f_v_j_per_m,
        evaluated: reports.len(),
        feasible,
    })
}
