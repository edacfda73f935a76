//! Cradle-to-gate impact of a functional unit: cumulative inventory
//! (Leontief solve), GWP characterization, stage attribution and
//! harmonization to energy-based figures.

mod harmonize;

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::inventory::{CharacterizationMethod, InventoryError, ProcessGraph};

pub use harmonize::{harmonize_per_kwh, module_efficiency, HarmonizationParams};

/// Graphs above this many activities are rejected: the solve is a dense LU,
/// O(n³) time and O(n²) memory.
pub const DENSE_ACTIVITY_LIMIT: usize = 500;

/// Bound on ‖(I − A)x − f‖∞ relative to ‖f‖∞.
pub const RESIDUAL_TOLERANCE: f64 = 1e-10;

/// Key under which impact driven by final demand on non-stage activities is
/// reported in the stage breakdown.
pub const FINAL_DEMAND_BUCKET: &str = "(final demand)";

#[derive(Debug, Error, PartialEq)]
pub enum LcaError {
    #[error(transparent)]
    Inventory(#[from] InventoryError),
    #[error("demand references unknown activity '{0}'")]
    UnknownActivity(String),
    #[error("demand for '{id}' is {amount}; demand must be finite and non-negative")]
    InvalidDemand { id: String, amount: f64 },
    #[error("non-productive inventory: {0}")]
    NonProductive(String),
    #[error("inventory has {0} activities; dense solve is limited to {DENSE_ACTIVITY_LIMIT}")]
    TooLarge(usize),
    #[error("no characterization factor for substance(s): {}", .0.join(", "))]
    MissingFactors(Vec<String>),
    #[error("electricity placeholder '{0}' is still in use; resolve stage regions first")]
    UnresolvedPlaceholder(String),
    #[error("harmonization: {0}")]
    Harmonization(String),
}

/// Final demand on activities, in each activity's unit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemandVector {
    entries: BTreeMap<String, f64>,
}

impl DemandVector {
    pub fn new(entries: BTreeMap<String, f64>) -> Result<Self, LcaError> {
        for (id, amount) in &entries {
            if !amount.is_finite() || *amount < 0.0 {
                return Err(LcaError::InvalidDemand {
                    id: id.clone(),
                    amount: *amount,
                });
            }
        }
        Ok(DemandVector { entries })
    }

    pub fn single(id: impl Into<String>, amount: f64) -> Result<Self, LcaError> {
        Self::new(BTreeMap::from([(id.into(), amount)]))
    }

    /// One functional unit of the graph's root activity.
    pub fn functional_unit(graph: &ProcessGraph) -> Self {
        DemandVector {
            entries: BTreeMap::from([(graph.root().to_string(), 1.0)]),
        }
    }

    pub fn entries(&self) -> &BTreeMap<String, f64> {
        &self.entries
    }

    pub fn scaled(&self, factor: f64) -> Result<Self, LcaError> {
        Self::new(self.entries.iter().map(|(k, v)| (k.clone(), v * factor)).collect())
    }
}

/// Activity id → total activity level needed to meet the demand.
pub type ScalingVector = BTreeMap<String, f64>;

/// Dense technosphere matrix over the graph's activities in id order.
/// `a[(i, j)]` is the amount of activity `i` consumed per unit of activity `j`.
pub(crate) struct Technosphere {
    pub ids: Vec<String>,
    pub index: BTreeMap<String, usize>,
    pub a: DMatrix<f64>,
}

impl Technosphere {
    pub fn new(graph: &ProcessGraph) -> Result<Self, LcaError> {
        let n = graph.activities().len();
        if n > DENSE_ACTIVITY_LIMIT {
            return Err(LcaError::TooLarge(n));
        }
        let ids: Vec<String> = graph.activities().keys().cloned().collect();
        let index: BTreeMap<String, usize> =
            ids.iter().enumerate().map(|(i, id)| (id.clone(), i)).collect();
        let mut a = DMatrix::zeros(n, n);
        for (j, id) in ids.iter().enumerate() {
            for input in &graph.activities()[id].inputs {
                a[(index[&input.id], j)] += input.amount;
            }
        }
        Ok(Technosphere { ids, index, a })
    }
}

fn solve_leontief(a: &DMatrix<f64>, f: &DVector<f64>) -> Result<DVector<f64>, LcaError> {
    let n = a.nrows();
    let m = DMatrix::identity(n, n) - a;
    let lu = m.clone().lu();
    let mut x = lu
        .solve(f)
        .ok_or_else(|| LcaError::NonProductive("I - A is singular".into()))?;
    let f_norm = f.amax();
    let mut residual = &m * &x - f;
    if residual.amax() > RESIDUAL_TOLERANCE * f_norm {
        // one step of iterative refinement
        if let Some(dx) = lu.solve(&residual) {
            x -= dx;
            residual = &m * &x - f;
        }
    }
    if !x.iter().all(|v| v.is_finite()) {
        return Err(LcaError::NonProductive("solution is not finite".into()));
    }
    if residual.amax() > RESIDUAL_TOLERANCE * f_norm {
        return Err(LcaError::NonProductive(format!(
            "residual {:e} exceeds tolerance",
            residual.amax()
        )));
    }
    let scale = x.amax().max(f_norm);
    if let Some(v) = x.iter().find(|v| **v < -1e-9 * scale) {
        return Err(LcaError::NonProductive(format!(
            "negative activity level {v:e}: spectral radius of A is at least 1"
        )));
    }
    Ok(x)
}

/// Solves (I − A)x = f for the activity levels that meet `demand` through
/// every supply-chain loop.
pub fn cumulative_inventory(
    graph: &ProcessGraph,
    demand: &DemandVector,
) -> Result<ScalingVector, LcaError> {
    let tech = Technosphere::new(graph)?;
    let mut f = DVector::zeros(tech.ids.len());
    for (id, amount) in demand.entries() {
        let i = *tech
            .index
            .get(id)
            .ok_or_else(|| LcaError::UnknownActivity(id.clone()))?;
        f[i] += amount;
    }
    let x = solve_leontief(&tech.a, &f)?;
    Ok(tech.ids.iter().cloned().zip(x.iter().copied()).collect())
}

/// Characterized cradle-to-gate impact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImpactResult {
    /// kg CO₂eq for the assessed demand (per m² for the functional unit).
    #[serde(rename = "total")]
    pub total_kg_co2eq: f64,
    pub per_stage: BTreeMap<String, f64>,
    pub per_substance: BTreeMap<String, f64>,
    pub transport_share: f64,
}

impl ImpactResult {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("impact result serializes")
    }
}

fn direct_impacts(
    graph: &ProcessGraph,
    method: &CharacterizationMethod,
) -> Result<BTreeMap<String, f64>, LcaError> {
    let mut missing = BTreeSet::new();
    let mut out = BTreeMap::new();
    for (id, a) in graph.activities() {
        let mut d = 0.0;
        for e in &a.emissions {
            match method.factor(&e.substance) {
                Some(f) => d += e.amount * f,
                None => {
                    missing.insert(e.substance.clone());
                }
            }
        }
        out.insert(id.clone(), d);
    }
    if !missing.is_empty() {
        return Err(LcaError::MissingFactors(missing.into_iter().collect()));
    }
    Ok(out)
}

/// Applies characterization factors to the emissions of the scaled
/// activities and attributes the result to production stages.
///
/// Stage attribution: a stage owns its own direct emissions plus the full
/// supply chain of the non-stage inputs it demands. Non-stage activities that
/// serve several stages are split in proportion to each stage's demand. This
/// follows from x_N = (I − A_NN)⁻¹ (A_NS x_S + f_N), which is exact even when
/// supporting activities feed back into stages.
pub fn characterize(
    graph: &ProcessGraph,
    x: &ScalingVector,
    method: &CharacterizationMethod,
) -> Result<ImpactResult, LcaError> {
    let direct = direct_impacts(graph, method)?;
    let x_scale = x.values().fold(0.0_f64, |m, v| m.max(v.abs()));
    for p in graph.electricity_placeholders() {
        // Unreachable activities can pick up round-off from the factorization.
        if x.get(p).copied().unwrap_or(0.0) > 1e-12 * x_scale {
            return Err(LcaError::UnresolvedPlaceholder(p.clone()));
        }
    }
    let level = |id: &str| x.get(id).copied().unwrap_or(0.0);

    let mut total = 0.0;
    let mut transport = 0.0;
    let mut per_substance: BTreeMap<String, f64> = BTreeMap::new();
    for (id, a) in graph.activities() {
        let xa = level(id);
        total += xa * direct[id];
        if a.is_transport() {
            transport += xa * direct[id];
        }
        for e in &a.emissions {
            let f = method.factor(&e.substance).expect("checked above");
            *per_substance.entry(e.substance.clone()).or_insert(0.0) += xa * e.amount * f;
        }
    }

    let per_stage = attribute_stages(graph, x, &direct)?;
    let transport_share = if total != 0.0 { transport / total } else { 0.0 };
    Ok(ImpactResult {
        total_kg_co2eq: total,
        per_stage,
        per_substance,
        transport_share,
    })
}

fn attribute_stages(
    graph: &ProcessGraph,
    x: &ScalingVector,
    direct: &BTreeMap<String, f64>,
) -> Result<BTreeMap<String, f64>, LcaError> {
    let tech = Technosphere::new(graph)?;
    let level = |id: &str| x.get(id).copied().unwrap_or(0.0);
    let stage_of: BTreeMap<&str, &str> = graph
        .activities()
        .values()
        .filter_map(|a| a.stage.as_deref().map(|s| (a.id.as_str(), s)))
        .collect();
    let stage_idx: Vec<usize> = tech
        .ids
        .iter()
        .enumerate()
        .filter(|(_, id)| stage_of.contains_key(id.as_str()))
        .map(|(i, _)| i)
        .collect();
    let other_idx: Vec<usize> = (0..tech.ids.len()).filter(|i| !stage_idx.contains(i)).collect();

    let mut per_stage = BTreeMap::new();
    let n_other = other_idx.len();
    let a_nn = DMatrix::from_fn(n_other, n_other, |r, c| tech.a[(other_idx[r], other_idx[c])]);

    // Right-hand sides: one column per stage, plus the final-demand column.
    let n_cols = stage_idx.len() + 1;
    let mut rhs = DMatrix::zeros(n_other, n_cols);
    for (c, &s) in stage_idx.iter().enumerate() {
        let xs = level(&tech.ids[s]);
        for (r, &j) in other_idx.iter().enumerate() {
            rhs[(r, c)] = tech.a[(j, s)] * xs;
        }
    }
    for (r, &j) in other_idx.iter().enumerate() {
        let mut f = level(&tech.ids[j]);
        for (c2, &k) in other_idx.iter().enumerate() {
            f -= a_nn[(r, c2)] * level(&tech.ids[k]);
        }
        for &s in &stage_idx {
            f -= tech.a[(j, s)] * level(&tech.ids[s]);
        }
        rhs[(r, n_cols - 1)] = f;
    }

    let y = if n_other > 0 {
        let m = DMatrix::identity(n_other, n_other) - &a_nn;
        m.lu()
            .solve(&rhs)
            .ok_or_else(|| LcaError::NonProductive("supporting sub-system is singular".into()))?
    } else {
        DMatrix::zeros(0, n_cols)
    };
    let supply_impact = |c: usize| -> f64 {
        other_idx
            .iter()
            .enumerate()
            .map(|(r, &j)| y[(r, c)] * direct[&tech.ids[j]])
            .sum()
    };

    let mut attributed = 0.0;
    for (c, &s) in stage_idx.iter().enumerate() {
        let id = &tech.ids[s];
        let value = level(id) * direct[id] + supply_impact(c);
        attributed += value.abs();
        per_stage.insert(stage_of[id.as_str()].to_string(), value);
    }
    let final_demand = supply_impact(n_cols - 1);
    if final_demand.abs() > 1e-12 * attributed.max(f64::MIN_POSITIVE) {
        per_stage.insert(FINAL_DEMAND_BUCKET.to_string(), final_demand);
    }
    Ok(per_stage)
}

/// Resolves stage regions, solves the inventory for one functional unit and
/// characterizes it. Stages not listed keep their declared location.
pub fn assess(
    graph: &ProcessGraph,
    stage_locations: &BTreeMap<String, String>,
    method: &CharacterizationMethod,
) -> Result<ImpactResult, LcaError> {
    let mut locations = graph.stage_locations();
    locations.extend(stage_locations.iter().map(|(k, v)| (k.clone(), v.clone())));
    let resolved = crate::inventory::resolve_region(graph, &locations, &[])?;
    let demand = DemandVector::functional_unit(&resolved);
    let x = cumulative_inventory(&resolved, &demand)?;
    characterize(&resolved, &x, method)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageContribution {
    pub stage: String,
    pub kg_co2eq: f64,
    pub share: f64,
}

/// Stages by descending contribution.
pub fn stage_contributions(result: &ImpactResult) -> Vec<StageContribution> {
    let sum: f64 = result.per_stage.values().sum();
    let mut out: Vec<StageContribution> = result
        .per_stage
        .iter()
        .map(|(stage, kg)| StageContribution {
            stage: stage.clone(),
            kg_co2eq: *kg,
            share: if sum != 0.0 { kg / sum } else { 0.0 },
        })
        .collect();
    out.sort_by(|a, b| {
        b.kg_co2eq
            .total_cmp(&a.kg_co2eq)
            .then_with(|| a.stage.cmp(&b.stage))
    });
    out
}

/// Characterized impact of one kWh of a region's grid mix, g CO₂eq/kWh.
pub fn mix_intensity(
    graph: &ProcessGraph,
    region: &str,
    method: &CharacterizationMethod,
) -> Result<f64, LcaError> {
    let mix = graph
        .mixes()
        .get(region)
        .ok_or_else(|| InventoryError::UnknownRegion(region.to_string()))?;
    let demand = DemandVector::single(mix.activity_id(), 1.0)?;
    let x = cumulative_inventory(graph, &demand)?;
    Ok(characterize(graph, &x, method)?.total_kg_co2eq * 1000.0)
}
