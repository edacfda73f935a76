//! Life-cycle inventory data model: activities, substances, electricity mixes,
//! characterization methods and country profiles.
//!
//! A [`ProcessGraph`] is immutable once loaded. Region relocation through
//! [`resolve_region`] returns a new graph and leaves the input untouched.

mod country;
mod format;
mod method;

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use country::{load_country_profiles, parse_country_profiles, CountryProfile};
pub use format::{parse_process_graph, serialize_process_graph};
pub use method::{load_method, parse_method, CharacterizationMethod, CO2_SUBSTANCE_ID};

/// Unit string of transport activities (tonne-kilometre).
pub const TRANSPORT_UNIT: &str = "tkm";
/// Unit string of electricity activities.
pub const ELECTRICITY_UNIT: &str = "kWh";
/// Tolerance on the sum of electricity mix shares.
pub const MIX_SHARE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum InventoryError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: IoErrorKind,
    },
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid amount {value:?} for {context}: {reason}")]
    InvalidAmount {
        context: String,
        value: String,
        reason: String,
    },
    #[error("no root activity")]
    NoRoot,
    #[error("dangling reference: {kind} '{id}' referenced by '{referrer}' does not exist")]
    Dangling {
        kind: &'static str,
        id: String,
        referrer: String,
    },
    #[error("duplicate {kind} id '{id}'")]
    Duplicate { kind: &'static str, id: String },
    #[error("unit mismatch on input '{input}' of '{activity}': declared {declared}, provider produces {expected}")]
    UnitMismatch {
        activity: String,
        input: String,
        declared: String,
        expected: String,
    },
    #[error("electricity mix for region '{region}' is invalid: {reason}")]
    InvalidMix { region: String, reason: String },
    #[error("unknown stage '{0}'")]
    UnknownStage(String),
    #[error("no electricity mix for region '{0}'")]
    UnknownRegion(String),
    #[error("characterization method: {0}")]
    Method(String),
    #[error("country profile row {row}: {message}")]
    Country { row: usize, message: String },
}

/// `std::io::Error` is not `PartialEq`; keep the kind and message.
#[derive(Debug, Error, PartialEq)]
#[error("{message}")]
pub struct IoErrorKind {
    pub kind: std::io::ErrorKind,
    pub message: String,
}

impl InventoryError {
    pub(crate) fn io(path: &Path, err: std::io::Error) -> Self {
        InventoryError::Io {
            path: path.display().to_string(),
            source: IoErrorKind {
                kind: err.kind(),
                message: err.to_string(),
            },
        }
    }
}

/// Technosphere input: an amount of another activity's output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Exchange {
    pub id: String,
    pub amount: f64,
    pub unit: String,
}

/// Biosphere output: a direct emission in kg.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Emission {
    pub substance: String,
    pub amount: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Activity {
    pub id: String,
    pub name: String,
    pub location: String,
    pub unit: String,
    /// Production stage label, set only on the stage activities themselves.
    pub stage: Option<String>,
    pub inputs: Vec<Exchange>,
    pub emissions: Vec<Emission>,
}

impl Activity {
    pub fn is_transport(&self) -> bool {
        self.unit == TRANSPORT_UNIT
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Substance {
    pub id: String,
    pub name: String,
}

/// Grid mix of a region, expressed as shares of generation technologies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElectricityMix {
    pub region: String,
    /// (generation technology activity id, share fraction)
    pub shares: Vec<(String, f64)>,
}

impl ElectricityMix {
    pub fn new(region: impl Into<String>, shares: Vec<(String, f64)>) -> Self {
        ElectricityMix {
            region: region.into(),
            shares,
        }
    }

    /// Id of the activity that supplies one kWh of this mix.
    pub fn activity_id(&self) -> String {
        mix_activity_id(&self.region)
    }

    pub fn validate(&self) -> Result<(), InventoryError> {
        let bad = |reason: String| InventoryError::InvalidMix {
            region: self.region.clone(),
            reason,
        };
        if self.shares.is_empty() {
            return Err(bad("no shares".into()));
        }
        let mut seen = BTreeSet::new();
        for (tech, share) in &self.shares {
            if !share.is_finite() || !(0.0..=1.0).contains(share) {
                return Err(bad(format!("share of '{tech}' is {share}, outside [0, 1]")));
            }
            if !seen.insert(tech) {
                return Err(bad(format!("technology '{tech}' listed twice")));
            }
        }
        let sum: f64 = self.shares.iter().map(|(_, s)| s).sum();
        if (sum - 1.0).abs() > MIX_SHARE_TOLERANCE {
            return Err(bad(format!("shares sum to {sum}, expected 1")));
        }
        Ok(())
    }

    fn to_activity(&self, region_name: Option<&str>) -> Activity {
        Activity {
            id: self.activity_id(),
            name: format!(
                "electricity, grid mix, {}",
                region_name.unwrap_or(&self.region)
            ),
            location: self.region.clone(),
            unit: ELECTRICITY_UNIT.to_string(),
            stage: None,
            inputs: self
                .shares
                .iter()
                .map(|(tech, share)| Exchange {
                    id: tech.clone(),
                    amount: *share,
                    unit: ELECTRICITY_UNIT.to_string(),
                })
                .collect(),
            emissions: Vec::new(),
        }
    }
}

pub fn mix_activity_id(region: &str) -> String {
    format!("electricity-{region}")
}

/// Descriptive header carried through load and serialize unchanged.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphMeta {
    pub name: String,
    pub notes: Vec<String>,
}

/// A validated, closed life-cycle inventory.
///
/// Regional electricity mixes are materialized as ordinary activities named
/// `electricity-<REGION>` whose inputs are the generation technologies at
/// their share. Stage activities draw electricity either from a placeholder
/// (unresolved) or from one of those mix activities.
#[derive(Debug, Clone, PartialEq)]
pub struct ProcessGraph {
    pub(crate) meta: GraphMeta,
    pub(crate) root: String,
    pub(crate) activities: BTreeMap<String, Activity>,
    pub(crate) substances: BTreeMap<String, Substance>,
    pub(crate) electricity_placeholders: BTreeSet<String>,
    pub(crate) regions: BTreeMap<String, String>,
    pub(crate) mixes: BTreeMap<String, ElectricityMix>,
}

impl ProcessGraph {
    /// Builds and validates a graph. Mix activities are generated here and
    /// must not be present in `activities`.
    pub fn new(
        root: impl Into<String>,
        activities: Vec<Activity>,
        substances: Vec<Substance>,
        electricity_placeholders: BTreeSet<String>,
        regions: BTreeMap<String, String>,
        mixes: Vec<ElectricityMix>,
    ) -> Result<Self, InventoryError> {
        let root = root.into();
        if activities.is_empty() {
            return Err(InventoryError::NoRoot);
        }
        let mut activity_map = BTreeMap::new();
        for a in activities {
            if activity_map.contains_key(&a.id) {
                return Err(InventoryError::Duplicate {
                    kind: "activity",
                    id: a.id,
                });
            }
            activity_map.insert(a.id.clone(), a);
        }
        let mut substance_map = BTreeMap::new();
        for s in substances {
            if substance_map.contains_key(&s.id) {
                return Err(InventoryError::Duplicate {
                    kind: "substance",
                    id: s.id,
                });
            }
            substance_map.insert(s.id.clone(), s);
        }
        let mut mix_map = BTreeMap::new();
        for m in mixes {
            if mix_map.contains_key(&m.region) {
                return Err(InventoryError::Duplicate {
                    kind: "mix",
                    id: m.region,
                });
            }
            let id = m.activity_id();
            if activity_map.contains_key(&id) {
                return Err(InventoryError::Duplicate { kind: "activity", id });
            }
            let act = m.to_activity(regions.get(&m.region).map(String::as_str));
            activity_map.insert(id, act);
            mix_map.insert(m.region.clone(), m);
        }
        let graph = ProcessGraph {
            meta: GraphMeta::default(),
            root,
            activities: activity_map,
            substances: substance_map,
            electricity_placeholders,
            regions,
            mixes: mix_map,
        };
        graph.validate()?;
        Ok(graph)
    }

    pub fn validate(&self) -> Result<(), InventoryError> {
        let root = self.activities.get(&self.root).ok_or(InventoryError::NoRoot)?;
        if root.stage.is_none() {
            return Err(InventoryError::Dangling {
                kind: "stage label on root",
                id: self.root.clone(),
                referrer: "graph root".into(),
            });
        }
        for id in &self.electricity_placeholders {
            let a = self.activities.get(id).ok_or_else(|| InventoryError::Dangling {
                kind: "activity",
                id: id.clone(),
                referrer: "electricity_placeholders".into(),
            })?;
            if a.unit != ELECTRICITY_UNIT {
                return Err(InventoryError::UnitMismatch {
                    activity: "electricity_placeholders".into(),
                    input: id.clone(),
                    declared: ELECTRICITY_UNIT.into(),
                    expected: a.unit.clone(),
                });
            }
        }
        let mut stages = BTreeSet::new();
        for a in self.activities.values() {
            if !self.regions.contains_key(&a.location) {
                return Err(InventoryError::Dangling {
                    kind: "region",
                    id: a.location.clone(),
                    referrer: a.id.clone(),
                });
            }
            if let Some(stage) = &a.stage {
                if !stages.insert(stage.clone()) {
                    return Err(InventoryError::Duplicate {
                        kind: "stage",
                        id: stage.clone(),
                    });
                }
            }
            for input in &a.inputs {
                check_amount(&input.amount, &format!("input '{}' of '{}'", input.id, a.id))?;
                if input.amount < 0.0 {
                    return Err(InventoryError::InvalidAmount {
                        context: format!("input '{}' of '{}'", input.id, a.id),
                        value: input.amount.to_string(),
                        reason: "technosphere amounts must be non-negative".into(),
                    });
                }
                let provider =
                    self.activities
                        .get(&input.id)
                        .ok_or_else(|| InventoryError::Dangling {
                            kind: "activity",
                            id: input.id.clone(),
                            referrer: a.id.clone(),
                        })?;
                if provider.unit != input.unit {
                    return Err(InventoryError::UnitMismatch {
                        activity: a.id.clone(),
                        input: input.id.clone(),
                        declared: input.unit.clone(),
                        expected: provider.unit.clone(),
                    });
                }
            }
            for e in &a.emissions {
                check_amount(&e.amount, &format!("emission '{}' of '{}'", e.substance, a.id))?;
                if !self.substances.contains_key(&e.substance) {
                    return Err(InventoryError::Dangling {
                        kind: "substance",
                        id: e.substance.clone(),
                        referrer: a.id.clone(),
                    });
                }
            }
        }
        for m in self.mixes.values() {
            m.validate()?;
            if !self.regions.contains_key(&m.region) {
                return Err(InventoryError::Dangling {
                    kind: "region",
                    id: m.region.clone(),
                    referrer: format!("mix {}", m.region),
                });
            }
            for (tech, _) in &m.shares {
                match self.activities.get(tech) {
                    None => {
                        return Err(InventoryError::Dangling {
                            kind: "activity",
                            id: tech.clone(),
                            referrer: format!("mix {}", m.region),
                        })
                    }
                    Some(t) if t.unit != ELECTRICITY_UNIT => {
                        return Err(InventoryError::InvalidMix {
                            region: m.region.clone(),
                            reason: format!("technology '{tech}' is not measured in kWh"),
                        })
                    }
                    _ => {}
                }
            }
        }
        Ok(())
    }

    pub fn with_meta(mut self, meta: GraphMeta) -> Self {
        self.meta = meta;
        self
    }

    pub fn meta(&self) -> &GraphMeta {
        &self.meta
    }

    pub fn root(&self) -> &str {
        &self.root
    }

    pub fn activities(&self) -> &BTreeMap<String, Activity> {
        &self.activities
    }

    pub fn activity(&self, id: &str) -> Option<&Activity> {
        self.activities.get(id)
    }

    pub fn substances(&self) -> &BTreeMap<String, Substance> {
        &self.substances
    }

    pub fn electricity_placeholders(&self) -> &BTreeSet<String> {
        &self.electricity_placeholders
    }

    pub fn regions(&self) -> &BTreeMap<String, String> {
        &self.regions
    }

    pub fn mixes(&self) -> &BTreeMap<String, ElectricityMix> {
        &self.mixes
    }

    /// Stage label → activity id.
    pub fn stages(&self) -> BTreeMap<String, String> {
        self.activities
            .values()
            .filter_map(|a| a.stage.as_ref().map(|s| (s.clone(), a.id.clone())))
            .collect()
    }

    /// Stage activity ids ordered from raw material to the root, i.e. every
    /// stage appears after the stages it consumes.
    pub fn stage_sequence(&self) -> Vec<String> {
        let stage_ids: BTreeSet<&String> = self
            .activities
            .values()
            .filter(|a| a.stage.is_some())
            .map(|a| &a.id)
            .collect();
        let mut order = Vec::new();
        let mut visited = BTreeSet::new();
        fn visit<'a>(
            g: &'a ProcessGraph,
            id: &'a String,
            stage_ids: &BTreeSet<&'a String>,
            visited: &mut BTreeSet<&'a String>,
            order: &mut Vec<String>,
        ) {
            if !visited.insert(id) {
                return;
            }
            for input in &g.activities[id].inputs {
                visit(g, &input.id, stage_ids, visited, order);
            }
            if stage_ids.contains(id) {
                order.push(id.clone());
            }
        }
        visit(self, &self.root, &stage_ids, &mut visited, &mut order);
        order
    }

    fn is_electricity_input(&self, id: &str) -> bool {
        self.electricity_placeholders.contains(id)
            || self.mixes.values().any(|m| m.activity_id() == id)
    }

    /// Resolves every stage's electricity to the mix of the stage's own
    /// `location`.
    pub fn resolve_defaults(&self) -> Result<ProcessGraph, InventoryError> {
        let locations: BTreeMap<String, String> = self
            .activities
            .values()
            .filter_map(|a| a.stage.as_ref().map(|s| (s.clone(), a.location.clone())))
            .collect();
        resolve_region(self, &locations, &[])
    }

    /// Current location of each stage.
    pub fn stage_locations(&self) -> BTreeMap<String, String> {
        self.activities
            .values()
            .filter_map(|a| a.stage.as_ref().map(|s| (s.clone(), a.location.clone())))
            .collect()
    }
}

fn check_amount(value: &f64, context: &str) -> Result<(), InventoryError> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(InventoryError::InvalidAmount {
            context: context.to_string(),
            value: value.to_string(),
            reason: "amount must be finite".into(),
        })
    }
}

/// Loads and validates an inventory file.
pub fn load_process_graph(path: impl AsRef<Path>) -> Result<ProcessGraph, InventoryError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| InventoryError::io(path, e))?;
    parse_process_graph(&text)
}

/// Points each listed stage's electricity input at the mix of the given region.
///
/// `mixes` are merged into the graph first (replacing mixes for the same
/// region), so a caller can supply regions the inventory file did not carry.
/// The input graph is not modified.
pub fn resolve_region(
    graph: &ProcessGraph,
    stage_locations: &BTreeMap<String, String>,
    mixes: &[ElectricityMix],
) -> Result<ProcessGraph, InventoryError> {
    let mut out = graph.clone();
    for mix in mixes {
        mix.validate()?;
        out.regions
            .entry(mix.region.clone())
            .or_insert_with(|| mix.region.clone());
        let act = mix.to_activity(out.regions.get(&mix.region).map(String::as_str));
        out.activities.insert(act.id.clone(), act);
        out.mixes.insert(mix.region.clone(), mix.clone());
    }
    let stages = out.stages();
    for (stage, region) in stage_locations {
        let activity_id = stages
            .get(stage)
            .ok_or_else(|| InventoryError::UnknownStage(stage.clone()))?;
        if !out.mixes.contains_key(region) {
            return Err(InventoryError::UnknownRegion(region.clone()));
        }
        let target = mix_activity_id(region);
        let rewired: Vec<Exchange> = out.activities[activity_id]
            .inputs
            .iter()
            .map(|input| {
                let mut input = input.clone();
                if out.is_electricity_input(&input.id) {
                    input.id = target.clone();
                }
                input
            })
            .collect();
        let act = out.activities.get_mut(activity_id).expect("stage activity exists");
        act.inputs = rewired;
        act.location = region.clone();
    }
    out.validate()?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data;

    fn bundled() -> ProcessGraph {
        parse_process_graph(data::PANEL_CN_NL_INV).unwrap()
    }

    #[test]
    fn bundled_fixture_has_six_stages_in_order() {
        let g = bundled();
        assert_eq!(g.root(), "pv-panel-1m2");
        let seq: Vec<String> = g
            .stage_sequence()
            .iter()
            .map(|id| g.activity(id).unwrap().stage.clone().unwrap())
            .collect();
        assert_eq!(seq, ["mg-si", "so-si", "cz-si", "wafer", "cell", "panel"]);
        assert!(g.activities().len() > 6);
    }

    #[test]
    fn relocating_panel_changes_only_panel_electricity() {
        let g = bundled();
        let all_cn: BTreeMap<String, String> = g
            .stages()
            .keys()
            .map(|s| (s.clone(), "CN".to_string()))
            .collect();
        let cn = resolve_region(&g, &all_cn, &[]).unwrap();
        let mut loc = all_cn.clone();
        loc.insert("panel".into(), "NL".into());
        let nl = resolve_region(&cn, &loc, &[]).unwrap();

        let panel_id = &g.stages()["panel"];
        for (id, a) in cn.activities() {
            let b = &nl.activities()[id];
            if id == panel_id {
                let before: Vec<&str> = a.inputs.iter().map(|i| i.id.as_str()).collect();
                let after: Vec<&str> = b.inputs.iter().map(|i| i.id.as_str()).collect();
                assert!(before.contains(&"electricity-CN"));
                assert!(after.contains(&"electricity-NL"));
                assert!(!after.contains(&"electricity-CN"));
                let amounts_a: Vec<f64> = a.inputs.iter().map(|i| i.amount).collect();
                let amounts_b: Vec<f64> = b.inputs.iter().map(|i| i.amount).collect();
                assert_eq!(amounts_a, amounts_b);
            } else {
                assert_eq!(a, b, "activity {id} changed");
            }
        }
    }

    #[test]
    fn identity_relocation_is_a_no_op() {
        let g = bundled().resolve_defaults().unwrap();
        let same = resolve_region(&g, &g.stage_locations(), &[]).unwrap();
        assert_eq!(g, same);
        let mixes: Vec<ElectricityMix> = g.mixes().values().cloned().collect();
        let same = resolve_region(&g, &g.stage_locations(), &mixes).unwrap();
        assert_eq!(g, same);
    }

    #[test]
    fn resolve_is_pure() {
        let g = bundled();
        let before = g.clone();
        let loc = g.stage_locations();
        let a = resolve_region(&g, &loc, &[]).unwrap();
        let b = resolve_region(&g, &loc, &[]).unwrap();
        assert_eq!(a, b);
        assert_eq!(g, before);
    }

    #[test]
    fn resolve_rejects_unknown_stage_and_region() {
        let g = bundled();
        let mut loc = BTreeMap::new();
        loc.insert("anodizing".to_string(), "CN".to_string());
        assert_eq!(
            resolve_region(&g, &loc, &[]),
            Err(InventoryError::UnknownStage("anodizing".into()))
        );
        let mut loc = BTreeMap::new();
        loc.insert("panel".to_string(), "XX".to_string());
        assert_eq!(
            resolve_region(&g, &loc, &[]),
            Err(InventoryError::UnknownRegion("XX".into()))
        );
    }

    #[test]
    fn mix_validation() {
        let ok = ElectricityMix::new("A", vec![("x".into(), 0.25), ("y".into(), 0.75)]);
        assert!(ok.validate().is_ok());
        let short = ElectricityMix::new("A", vec![("x".into(), 0.25), ("y".into(), 0.7)]);
        assert!(matches!(short.validate(), Err(InventoryError::InvalidMix { .. })));
        let neg = ElectricityMix::new("A", vec![("x".into(), -0.25), ("y".into(), 1.25)]);
        assert!(neg.validate().is_err());
    }
}
