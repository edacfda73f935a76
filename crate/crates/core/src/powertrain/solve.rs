use clarabel::algebra::CscMatrix;
use clarabel::solver::{DefaultSettingsBuilder, DefaultSolver, IPSolver, SolverStatus};
use serde::{Deserialize, Serialize};

use super::params::{vehicle_mass, DesignVars};
use super::problem::{build_design_problem, build_design_problem_excluding, DesignProblem, Layout, Lin};
use super::{
    CellSpec, ConstraintFamily, DriveCycle, PerformanceReqs, PowertrainError, VehicleParams,
};

/// Tightness threshold relative to the peak battery power.
pub const TIGHTNESS_RELATIVE: f64 = 1e-6;

/// Per-step solution trajectories, W and J.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trajectories {
    pub p_mech: Vec<f64>,
    pub p_ac: Vec<f64>,
    pub p_b: Vec<f64>,
    pub p_p: Vec<f64>,
    pub energy: Vec<f64>,
}

/// Slack of the bus power-balance epigraph at the optimum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tightness {
    /// Largest per-step gap between P_b and the active branch, W.
    pub max_slack_w: f64,
    /// Step where the largest gap occurs.
    pub worst_step: usize,
    pub max_abs_p_b_w: f64,
    pub tight: bool,
}

/// Which requirement constraints bind at the optimum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActiveConstraints {
    pub area: bool,
    pub acceleration: bool,
    pub top_speed: bool,
    pub range: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignResult {
    pub vars: DesignVars,
    /// Distance-specific consumption at the battery terminals, J/m.
    pub f_v_j_per_m: f64,
    pub f_v_kwh_per_km: f64,
    pub f_v_kwh_per_100km: f64,
    pub mass_kg: f64,
    pub panel_area_m2: f64,
    /// Panel output while driving, W.
    pub panel_power_w: f64,
    pub k_hi: f64,
    pub status: String,
    pub duality_gap_rel: f64,
    pub iterations: u32,
    pub tightness: Tightness,
    pub active: ActiveConstraints,
    /// Outer mass iterations. Mass enters the program affinely, so one solve suffices.
    pub mass_iterations: u32,
    #[serde(skip)]
    pub trajectories: Trajectories,
}

impl DesignResult {
    pub fn f_v_kwh_per_km(&self) -> f64 {
        self.f_v_kwh_per_km
    }
}

/// Builds and solves in one call.
pub fn design(
    cycle: &DriveCycle,
    params: &VehicleParams,
    cell: &CellSpec,
    reqs: &PerformanceReqs,
    k_hi: f64,
    fixed_panel_cells: Option<f64>,
) -> Result<DesignResult, PowertrainError> {
    let problem = build_design_problem(cycle, params, cell, reqs, k_hi, fixed_panel_cells)?;
    solve_design(&problem)
}

enum Outcome {
    Optimal(clarabel::solver::DefaultSolution<f64>),
    Infeasible,
    Unbounded,
    Other(SolverStatus),
}

fn run_solver(problem: &DesignProblem) -> Result<Outcome, PowertrainError> {
    if !problem.violated_constant_rows().is_empty() {
        return Ok(Outcome::Infeasible);
    }
    let n = problem.num_variables();
    let (a, b, cones) = problem.conic_data();
    let p = CscMatrix::zeros((n, n));
    let settings = DefaultSettingsBuilder::default()
        .verbose(false)
        .max_threads(1)
        .max_iter(400)
        .tol_gap_abs(1e-9)
        .tol_gap_rel(1e-9)
        .tol_feas(1e-9)
        .build()
        .map_err(|e| PowertrainError::Solver(e.to_string()))?;
    let mut solver = DefaultSolver::new(&p, &problem.objective, &a, &b, &cones, settings)
        .map_err(|e| PowertrainError::Solver(format!("{e:?}")))?;
    solver.solve();
    let sol = solver.solution;
    Ok(match sol.status {
        SolverStatus::Solved | SolverStatus::AlmostSolved => Outcome::Optimal(sol),
        SolverStatus::PrimalInfeasible | SolverStatus::AlmostPrimalInfeasible => Outcome::Infeasible,
        SolverStatus::DualInfeasible | SolverStatus::AlmostDualInfeasible => Outcome::Unbounded,
        other => Outcome::Other(other),
    })
}

/// Solves the program to global optimality.
///
/// On infeasibility the requirement families are dropped one at a time; the
/// families whose removal restores feasibility are reported.
pub fn solve_design(problem: &DesignProblem) -> Result<DesignResult, PowertrainError> {
    match run_solver(problem)? {
        Outcome::Optimal(sol) => Ok(extract(problem, &sol)),
        Outcome::Infeasible => Err(PowertrainError::Infeasible {
            families: diagnose(problem)?,
        }),
        Outcome::Unbounded => Err(PowertrainError::Unbounded),
        Outcome::Other(status) => Err(PowertrainError::Numerical {
            status: format!("{status:?}"),
        }),
    }
}

fn diagnose(problem: &DesignProblem) -> Result<Vec<ConstraintFamily>, PowertrainError> {
    let mut culprits = Vec::new();
    for family in ConstraintFamily::DIAGNOSABLE {
        if problem.excluded.contains(&family) {
            continue;
        }
        let mut exclude = problem.excluded.clone();
        exclude.push(family);
        let relaxed = build_design_problem_excluding(
            &problem.cycle,
            &problem.params,
            &problem.cell,
            &problem.reqs,
            problem.k_hi,
            problem.fixed_panel,
            &exclude,
        )?;
        if matches!(run_solver(&relaxed)?, Outcome::Optimal(_)) {
            culprits.push(family);
        }
    }
    if culprits.is_empty() {
        culprits = ConstraintFamily::DIAGNOSABLE
            .into_iter()
            .filter(|f| !problem.excluded.contains(f))
            .collect();
    }
    Ok(culprits)
}

fn extract(problem: &DesignProblem, sol: &clarabel::solver::DefaultSolution<f64>) -> DesignResult {
    let x = &sol.x;
    let layout = problem.layout;
    let n = layout.steps;
    let cycle = &problem.cycle;
    let params = &problem.params;

    let vars = DesignVars::new(
        x[Layout::MOTOR].max(0.0),
        x[Layout::BATTERY].max(0.0),
        problem.panel_cells(x).max(0.0),
    );
    let p_p_kw = problem.cell_power_kw() * vars.panel_cells;
    let kw = |idx: &dyn Fn(usize) -> usize| (0..n).map(|k| x[idx(k)] * 1000.0).collect::<Vec<_>>();
    let trajectories = Trajectories {
        p_mech: kw(&|k| layout.p_mech(k)),
        p_ac: kw(&|k| layout.p_ac(k)),
        p_b: kw(&|k| layout.p_b(k)),
        p_p: vec![p_p_kw * 1000.0; n],
        energy: (0..n).map(|k| x[layout.energy(k)] * 1e6).collect(),
    };

    let energy_j: f64 = trajectories.p_b.iter().map(|p| p * cycle.dt).sum();
    let f_v = energy_j / cycle.distance;

    let eta = params.inverter_efficiency;
    let aux = problem.reqs.aux_power_w;
    let mut max_slack = 0.0_f64;
    let mut worst_step = 0;
    for k in 0..n {
        let bus = trajectories.p_ac[k] - p_p_kw * 1000.0 + aux;
        let slack = (trajectories.p_b[k] - (bus / eta).max(bus * eta)).abs();
        if slack > max_slack {
            max_slack = slack;
            worst_step = k;
        }
    }
    let max_abs_p_b = trajectories.p_b.iter().fold(0.0_f64, |m, p| m.max(p.abs()));
    let tightness = Tightness {
        max_slack_w: max_slack,
        worst_step,
        max_abs_p_b_w: max_abs_p_b,
        tight: max_slack <= TIGHTNESS_RELATIVE * max_abs_p_b,
    };

    let active_of = |family: ConstraintFamily, scale: f64| {
        problem
            .nonneg
            .iter()
            .filter(|r| r.family == family)
            .any(|r| is_active(&r.expr, x, scale))
    };
    let p_mo = params.motor_ref_power_w / 1000.0;
    let e_bo = params.battery_ref_energy_j / 1e6;
    let active = ActiveConstraints {
        area: active_of(ConstraintFamily::Area, params.available_area_m2.max(1.0)),
        acceleration: active_of(ConstraintFamily::Acceleration, p_mo * vars.motor_scale.max(1e-3)),
        top_speed: active_of(ConstraintFamily::TopSpeed, p_mo * vars.motor_scale.max(1e-3)),
        range: active_of(ConstraintFamily::Range, e_bo * vars.battery_scale.max(1e-3)),
    };

    let gap = (sol.obj_val - sol.obj_val_dual).abs() / sol.obj_val.abs().max(1e-12);
    DesignResult {
        vars,
        f_v_j_per_m: f_v,
        f_v_kwh_per_km: f_v / 3600.0,
        f_v_kwh_per_100km: f_v / 36.0,
        mass_kg: vehicle_mass(&vars, params, &problem.cell),
        panel_area_m2: vars.panel_area(&problem.cell),
        panel_power_w: p_p_kw * 1000.0,
        k_hi: problem.k_hi,
        status: format!("{:?}", sol.status),
        duality_gap_rel: gap,
        iterations: sol.iterations,
        tightness,
        active,
        mass_iterations: 1,
        trajectories,
    }
}

fn is_active(expr: &Lin, x: &[f64], scale: f64) -> bool {
    expr.eval(x) <= 1e-6 * scale
}
