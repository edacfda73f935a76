use clarabel::algebra::CscMatrix;
use clarabel::solver::SupportedConeT;

use super::params::{positive, CellSpec, PerformanceReqs, VehicleParams};
use super::{ConstraintFamily, DriveCycle, PowertrainError};

/// Affine expression `Σ c_i x_i + constant`.
#[derive(Debug, Clone, Default)]
pub(crate) struct Lin {
    pub terms: Vec<(usize, f64)>,
    pub constant: f64,
}

impl Lin {
    fn constant(c: f64) -> Self {
        Lin {
            terms: Vec::new(),
            constant: c,
        }
    }

    fn var(i: usize, c: f64) -> Self {
        Lin {
            terms: vec![(i, c)],
            constant: 0.0,
        }
    }

    fn term(mut self, i: usize, c: f64) -> Self {
        self.terms.push((i, c));
        self
    }

    fn plus(mut self, other: &Lin, scale: f64) -> Self {
        self.terms.extend(other.terms.iter().map(|&(i, c)| (i, c * scale)));
        self.constant += other.constant * scale;
        self
    }

    fn shift(mut self, c: f64) -> Self {
        self.constant += c;
        self
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.constant + self.terms.iter().map(|&(i, c)| c * x[i]).sum::<f64>()
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Row {
    pub expr: Lin,
    pub family: ConstraintFamily,
}

/// Column positions of the decision variables.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Layout {
    pub steps: usize,
    pub panel_free: bool,
}

impl Layout {
    pub const MOTOR: usize = 0;
    pub const BATTERY: usize = 1;
    pub const PANEL: usize = 2;

    pub fn sizing(&self) -> usize {
        if self.panel_free {
            3
        } else {
            2
        }
    }
    pub fn p_mech(&self, k: usize) -> usize {
        self.sizing() + k
    }
    pub fn p_ac(&self, k: usize) -> usize {
        self.sizing() + self.steps + k
    }
    pub fn p_b(&self, k: usize) -> usize {
        self.sizing() + 2 * self.steps + k
    }
    pub fn energy(&self, k: usize) -> usize {
        self.sizing() + 3 * self.steps + k
    }
    pub fn len(&self) -> usize {
        self.sizing() + 4 * self.steps
    }
}

/// Conic program for the joint design, ready for an interior-point solver.
///
/// Rows are stored as affine expressions constrained to a cone:
/// `expr = 0`, `expr ≥ 0`, or `(e0, e1, e2)` in the second-order cone.
#[derive(Debug, Clone)]
pub struct DesignProblem {
    pub(crate) cycle: DriveCycle,
    pub(crate) params: VehicleParams,
    pub(crate) cell: CellSpec,
    pub(crate) reqs: PerformanceReqs,
    pub(crate) k_hi: f64,
    pub(crate) fixed_panel: Option<f64>,
    pub(crate) layout: Layout,
    pub(crate) objective: Vec<f64>,
    pub(crate) zero: Vec<Row>,
    pub(crate) nonneg: Vec<Row>,
    pub(crate) soc: Vec<[Lin; 3]>,
    pub(crate) excluded: Vec<ConstraintFamily>,
}

impl DesignProblem {
    pub fn num_variables(&self) -> usize {
        self.layout.len()
    }

    pub fn num_sizing_variables(&self) -> usize {
        self.layout.sizing()
    }

    pub fn has_panel_variable(&self) -> bool {
        self.layout.panel_free
    }

    pub fn steps(&self) -> usize {
        self.layout.steps
    }

    pub fn num_constraints(&self) -> usize {
        self.zero.len() + self.nonneg.len() + 3 * self.soc.len()
    }

    pub fn k_hi(&self) -> f64 {
        self.k_hi
    }

    pub fn fixed_panel(&self) -> Option<f64> {
        self.fixed_panel
    }

    /// Panel output per cell while driving, kW.
    pub(crate) fn cell_power_kw(&self) -> f64 {
        self.cell.peak_power_w * self.k_hi / 1000.0
    }

    pub(crate) fn panel_cells(&self, x: &[f64]) -> f64 {
        match self.fixed_panel {
            Some(s) => s,
            None => x[Layout::PANEL],
        }
    }

    /// Row that holds only a constant and is violated. Such rows cannot be
    /// handed to the solver, so they are reported directly.
    pub(crate) fn violated_constant_rows(&self) -> Vec<ConstraintFamily> {
        let mut out: Vec<ConstraintFamily> = self
            .nonneg
            .iter()
            .filter(|r| r.expr.terms.is_empty() && r.expr.constant < 0.0)
            .map(|r| r.family)
            .collect();
        out.extend(
            self.zero
                .iter()
                .filter(|r| r.expr.terms.is_empty() && r.expr.constant != 0.0)
                .map(|r| r.family),
        );
        out.sort();
        out.dedup();
        out
    }

    /// Solver data `(A, b, cones)` for `s = b − A x ∈ K`.
    pub(crate) fn conic_data(&self) -> (CscMatrix<f64>, Vec<f64>, Vec<SupportedConeT<f64>>) {
        let rows: Vec<&Lin> = self
            .zero
            .iter()
            .map(|r| &r.expr)
            .chain(self.nonneg.iter().map(|r| &r.expr))
            .chain(self.soc.iter().flatten())
            .collect();
        let mut ii = Vec::new();
        let mut jj = Vec::new();
        let mut vv = Vec::new();
        let mut b = Vec::with_capacity(rows.len());
        for (r, expr) in rows.iter().enumerate() {
            for &(j, c) in &expr.terms {
                if c != 0.0 {
                    ii.push(r);
                    jj.push(j);
                    vv.push(-c);
                }
            }
            b.push(expr.constant);
        }
        let a = CscMatrix::new_from_triplets(rows.len(), self.num_variables(), ii, jj, vv);
        let mut cones = Vec::new();
        if !self.zero.is_empty() {
            cones.push(SupportedConeT::ZeroConeT(self.zero.len()));
        }
        if !self.nonneg.is_empty() {
            cones.push(SupportedConeT::NonnegativeConeT(self.nonneg.len()));
        }
        cones.extend(self.soc.iter().map(|_| SupportedConeT::SecondOrderConeT(3)));
        (a, b, cones)
    }
}

/// Builds the design program. With `fixed_panel_cells = Some(0.0)` the
/// program is the battery-electric baseline.
pub fn build_design_problem(
    cycle: &DriveCycle,
    params: &VehicleParams,
    cell: &CellSpec,
    reqs: &PerformanceReqs,
    k_hi: f64,
    fixed_panel_cells: Option<f64>,
) -> Result<DesignProblem, PowertrainError> {
    build_design_problem_excluding(cycle, params, cell, reqs, k_hi, fixed_panel_cells, &[])
}

/// As [`build_design_problem`], leaving out the listed constraint families.
pub fn build_design_problem_excluding(
    cycle: &DriveCycle,
    params: &VehicleParams,
    cell: &CellSpec,
    reqs: &PerformanceReqs,
    k_hi: f64,
    fixed_panel_cells: Option<f64>,
    exclude: &[ConstraintFamily],
) -> Result<DesignProblem, PowertrainError> {
    params.validate()?;
    cell.validate()?;
    reqs.validate()?;
    if !(0.0..=1.0).contains(&k_hi) {
        return Err(PowertrainError::InvalidParameter(format!("k_hi = {k_hi}, expected [0, 1]")));
    }
    if let Some(s) = fixed_panel_cells {
        positive("fixed panel cells", s, true)?;
    }

    let n = cycle.steps();
    let layout = Layout {
        steps: n,
        panel_free: fixed_panel_cells.is_none(),
    };
    let p = params;
    let p_mo = p.motor_ref_power_w / 1000.0;
    let e_bo = p.battery_ref_energy_j / 1e6;
    let zeta = p.battery_usable_fraction;
    let eta_gb = p.drivetrain_efficiency;
    let eta_inv = p.inverter_efficiency;
    let aux = reqs.aux_power_w / 1000.0;

    // Vehicle mass, kg.
    let mut mass = Lin::constant(p.base_mass())
        .term(Layout::MOTOR, p.motor_ref_mass_kg)
        .term(Layout::BATTERY, p.battery_ref_mass_kg);
    // Panel output, kW.
    let panel = match fixed_panel_cells {
        None => {
            mass = mass.term(Layout::PANEL, cell.mass_kg);
            Lin::var(Layout::PANEL, cell.peak_power_w * k_hi / 1000.0)
        }
        Some(s) => {
            mass = mass.shift(cell.mass_kg * s);
            Lin::constant(s * cell.peak_power_w * k_hi / 1000.0)
        }
    };

    let mut zero = Vec::new();
    let mut nonneg = Vec::new();
    let mut soc = Vec::new();
    let keep = |f: ConstraintFamily| !exclude.contains(&f);
    let push = |rows: &mut Vec<Row>, family: ConstraintFamily, expr: Lin| {
        if keep(family) {
            rows.push(Row { expr, family });
        }
    };

    let dt = cycle.dt;
    for k in 0..n {
        let v = cycle.speed[k];
        let a = cycle.accel[k];
        // Wheel power, kW.
        let wheel = Lin::default()
            .plus(&mass, p.wheel_power_per_kg(v, a) / 1000.0)
            .shift(p.aero_power(v) / 1000.0);
        for eta in [1.0 / eta_gb, eta_gb] {
            push(
                &mut nonneg,
                ConstraintFamily::Traction,
                Lin::var(layout.p_mech(k), 1.0).plus(&wheel, -eta),
            );
        }

        push(
            &mut nonneg,
            ConstraintFamily::MotorLimit,
            Lin::var(Layout::MOTOR, p_mo).term(layout.p_mech(k), -1.0),
        );
        push(
            &mut nonneg,
            ConstraintFamily::MotorLimit,
            Lin::var(Layout::MOTOR, p_mo).term(layout.p_mech(k), 1.0),
        );

        // (P_ac − P_mech − idle) · S_m·P_mo/k_m ≥ P_mech² as a rotated cone.
        if keep(ConstraintFamily::MotorLoss) {
            let idle = if v > 0.0 {
                p.motor_idle_loss_fraction * p_mo
            } else {
                0.0
            };
            let u = Lin::var(layout.p_ac(k), 1.0)
                .term(layout.p_mech(k), -1.0)
                .term(Layout::MOTOR, -idle);
            let w = Lin::var(Layout::MOTOR, p_mo / p.motor_loss_coeff);
            soc.push([
                u.clone().plus(&w, 1.0),
                u.plus(&w, -1.0),
                Lin::var(layout.p_mech(k), 2.0),
            ]);
        }

        // Bus power drawn from the battery side of the inverter.
        let bus = Lin::var(layout.p_ac(k), 1.0).plus(&panel, -1.0).shift(aux);
        for eta in [1.0 / eta_inv, eta_inv] {
            push(
                &mut nonneg,
                ConstraintFamily::PowerBalance,
                Lin::var(layout.p_b(k), 1.0).plus(&bus, -eta),
            );
        }

        let mut dyn_row = Lin::var(layout.energy(k), 1.0).term(layout.p_b(k), dt / 1000.0);
        dyn_row = if k == 0 {
            dyn_row.term(Layout::BATTERY, -zeta * e_bo)
        } else {
            dyn_row.term(layout.energy(k - 1), -1.0)
        };
        push(&mut zero, ConstraintFamily::BatteryDynamics, dyn_row);
        push(
            &mut nonneg,
            ConstraintFamily::BatteryWindow,
            Lin::var(layout.energy(k), 1.0),
        );
    }

    // Cycle energy scaled to the required range must fit in the usable battery.
    let scale = reqs.min_range_m / cycle.distance;
    let mut range = Lin::var(Layout::BATTERY, zeta * e_bo);
    for k in 0..n {
        range = range.term(layout.p_b(k), -scale * dt / 1000.0);
    }
    push(&mut nonneg, ConstraintFamily::Range, range);

    let vt = reqs.min_top_speed_mps;
    let top = Lin::var(Layout::MOTOR, eta_gb * p_mo)
        .plus(&mass, -p.wheel_power_per_kg(vt, 0.0) / 1000.0)
        .shift(-p.aero_power(vt) / 1000.0);
    push(&mut nonneg, ConstraintFamily::TopSpeed, top);

    let va = reqs.accel_target_mps;
    let accel_coeff = p.accel_power_margin * va * va / (2.0 * reqs.max_accel_time_s) / 1000.0;
    let accel = Lin::var(Layout::MOTOR, p_mo).plus(&mass, -accel_coeff);
    push(&mut nonneg, ConstraintFamily::Acceleration, accel);

    let area = match fixed_panel_cells {
        None => Lin::constant(p.available_area_m2).term(Layout::PANEL, -cell.area_m2),
        Some(s) => Lin::constant(p.available_area_m2 - s * cell.area_m2),
    };
    push(&mut nonneg, ConstraintFamily::Area, area);

    for i in 0..layout.sizing() {
        push(&mut nonneg, ConstraintFamily::Bounds, Lin::var(i, 1.0));
    }

    // Objective: Σ P_b·dt / distance, in J/m.
    let mut objective = vec![0.0; layout.len()];
    for k in 0..n {
        objective[layout.p_b(k)] = dt * 1000.0 / cycle.distance;
    }

    Ok(DesignProblem {
        cycle: cycle.clone(),
        params: params.clone(),
        cell: *cell,
        reqs: *reqs,
        k_hi,
        fixed_panel: fixed_panel_cells,
        layout,
        objective,
        zero,
        nonneg,
        soc,
        excluded: exclude.to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn defaults() -> (DriveCycle, VehicleParams, CellSpec, PerformanceReqs) {
        (
            DriveCycle::wltc_class3(),
            VehicleParams::default(),
            CellSpec::default(),
            PerformanceReqs::default(),
        )
    }

    #[test]
    fn wltc_program_size() {
        let (c, p, cell, r) = defaults();
        let free = build_design_problem(&c, &p, &cell, &r, 0.2, None).unwrap();
        assert_eq!(free.num_sizing_variables(), 3);
        assert_eq!(free.num_variables(), 3 + 4 * 1800);
        let bev = build_design_problem(&c, &p, &cell, &r, 0.2, Some(0.0)).unwrap();
        assert!(!bev.has_panel_variable());
        assert_eq!(bev.num_variables(), 2 + 4 * 1800);
        assert_eq!(bev.soc.len(), 1800);
        assert_eq!(bev.zero.len(), 1800);
    }

    #[test]
    fn bev_program_has_no_panel_power() {
        let (c, p, cell, r) = defaults();
        let bev = build_design_problem(&c, &p, &cell, &r, 1.0, Some(0.0)).unwrap();
        for row in bev.nonneg.iter().filter(|r| r.family == ConstraintFamily::PowerBalance) {
            assert!(row.expr.terms.len() == 2);
        }
    }

    #[test]
    fn excluded_family_is_absent() {
        let (c, p, cell, r) = defaults();
        let prob =
            build_design_problem_excluding(&c, &p, &cell, &r, 0.2, None, &[ConstraintFamily::Range]).unwrap();
        assert!(prob.nonneg.iter().all(|r| r.family != ConstraintFamily::Range));
    }

    #[test]
    fn oversized_fixed_panel_is_a_violated_constant_row() {
        let (c, p, cell, r) = defaults();
        let prob = build_design_problem(&c, &p, &cell, &r, 0.2, Some(200.0)).unwrap();
        assert_eq!(prob.violated_constant_rows(), vec![ConstraintFamily::Area]);
        let prob = build_design_problem(&c, &p, &cell, &r, 0.2, Some(100.0)).unwrap();
        assert!(prob.violated_constant_rows().is_empty());
    }

    #[test]
    fn invalid_k_hi_rejected() {
        let (c, p, cell, r) = defaults();
        assert!(build_design_problem(&c, &p, &cell, &r, 1.5, None).is_err());
        assert!(build_design_problem(&c, &p, &cell, &r, 0.2, Some(-1.0)).is_err());
    }

    #[test]
    fn conic_data_shapes() {
        let c = DriveCycle::new(1.0, vec![0.0, 2.0, 4.0, 0.0]).unwrap();
        let prob = build_design_problem(
            &c,
            &VehicleParams::default(),
            &CellSpec::default(),
            &PerformanceReqs::default(),
            0.3,
            None,
        )
        .unwrap();
        let (a, b, cones) = prob.conic_data();
        assert_eq!(a.m, prob.num_constraints());
        assert_eq!(a.n, prob.num_variables());
        assert_eq!(b.len(), a.m);
        assert_eq!(cones.len(), 2 + 3);
    }
}
