//! Joint sizing of motor, battery and solar panel over a drive cycle.
//!
//! Powers inside the conic program are in kW and energies in MJ; everything
//! that leaves this module is in SI units.

mod cycle;
mod params;
mod problem;
mod simulate;
mod solve;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use cycle::DriveCycle;
pub use params::{panel_power, vehicle_mass, CellSpec, DesignVars, PerformanceReqs, VehicleParams};
pub use problem::{build_design_problem, build_design_problem_excluding, DesignProblem};
pub use simulate::{
    forward_simulate, full_throttle_time, grid_search_oracle, GridResult, GridSpec, SimulationReport,
    Violation,
};
pub use solve::{design, solve_design, ActiveConstraints, DesignResult, Tightness, Trajectories};

/// Relative tolerance used when checking a fixed sizing against the requirements.
pub const FEASIBILITY_TOLERANCE: f64 = 1e-6;

/// Groups of constraint rows. Used to diagnose infeasible specifications.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstraintFamily {
    Traction,
    MotorLimit,
    MotorLoss,
    PowerBalance,
    BatteryDynamics,
    BatteryWindow,
    Range,
    TopSpeed,
    Acceleration,
    Area,
    Bounds,
}

impl ConstraintFamily {
    /// Families that are requirements rather than model physics.
    pub const DIAGNOSABLE: [ConstraintFamily; 6] = [
        ConstraintFamily::MotorLimit,
        ConstraintFamily::BatteryWindow,
        ConstraintFamily::Range,
        ConstraintFamily::TopSpeed,
        ConstraintFamily::Acceleration,
        ConstraintFamily::Area,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ConstraintFamily::Traction => "traction",
            ConstraintFamily::MotorLimit => "motor_limit",
            ConstraintFamily::MotorLoss => "motor_loss",
            ConstraintFamily::PowerBalance => "power_balance",
            ConstraintFamily::BatteryDynamics => "battery_dynamics",
            ConstraintFamily::BatteryWindow => "battery_window",
            ConstraintFamily::Range => "range",
            ConstraintFamily::TopSpeed => "top_speed",
            ConstraintFamily::Acceleration => "acceleration",
            ConstraintFamily::Area => "area",
            ConstraintFamily::Bounds => "bounds",
        }
    }
}

impl std::fmt::Display for ConstraintFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PowertrainError {
    #[error("invalid drive cycle: {0}")]
    InvalidCycle(String),
    #[error("{0}")]
    Io(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("design problem is infeasible; conflicting constraints: {}", join(families))]
    Infeasible { families: Vec<ConstraintFamily> },
    #[error("design problem is unbounded (internal model error)")]
    Unbounded,
    #[error("solver stopped without an optimal solution: {status}")]
    Numerical { status: String },
    #[error("no feasible point on the search grid")]
    EmptyFeasibleSet,
    #[error("solver setup failed: {0}")]
    Solver(String),
}

fn join(families: &[ConstraintFamily]) -> String {
    families.iter().map(|f| f.name()).collect::<Vec<_>>().join(", ")
}

impl PowertrainError {
    /// True for errors caused by the inputs rather than by the numerics.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            PowertrainError::InvalidCycle(_) | PowertrainError::Io(_) | PowertrainError::InvalidParameter(_)
        )
    }
}
