//! Text format for inventories.
//!
//! The file is TOML with five top-level sections:
//!
//! ```toml
//! [graph]
//! name = "..."
//! root = "pv-panel-1m2"
//! electricity_placeholders = ["electricity"]
//! notes = ["free text, kept verbatim"]
//!
//! [[countries]]
//! code = "CN"
//! name = "China"
//!
//! [[substances]]
//! id = "co2"
//! name = "Carbon dioxide, fossil"
//!
//! [[mixes]]
//! region = "CN"
//! shares = [{ tech = "gen-coal", share = "0.61" }, ...]
//!
//! [[activities]]
//! id = "mg-si"
//! name = "..."
//! location = "CN"
//! unit = "kg"
//! stage = "mg-si"            # only on production stages
//! inputs = [{ id = "quartz", amount = "2.8", unit = "kg" }, ...]
//! emissions = [{ substance = "co2", amount = "3.4" }, ...]
//! ```
//!
//! Amounts are decimal strings so that values survive editing tools
//! unchanged; non-finite values are rejected.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::Deserialize;

use super::{
    Activity, ElectricityMix, Emission, Exchange, GraphMeta, InventoryError, ProcessGraph,
    Substance,
};

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFile {
    graph: RawGraph,
    #[serde(default)]
    countries: Vec<RawCountry>,
    #[serde(default)]
    substances: Vec<Substance>,
    #[serde(default)]
    mixes: Vec<RawMix>,
    #[serde(default)]
    activities: Vec<RawActivity>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGraph {
    #[serde(default)]
    name: String,
    root: String,
    #[serde(default)]
    electricity_placeholders: Vec<String>,
    #[serde(default)]
    notes: Vec<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCountry {
    code: String,
    name: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMix {
    region: String,
    shares: Vec<RawShare>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawShare {
    tech: String,
    share: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawActivity {
    id: String,
    name: String,
    location: String,
    unit: String,
    stage: Option<String>,
    #[serde(default)]
    inputs: Vec<RawInput>,
    #[serde(default)]
    emissions: Vec<RawEmission>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInput {
    id: String,
    amount: String,
    unit: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEmission {
    substance: String,
    amount: String,
}

pub(crate) fn parse_decimal(value: &str, context: impl Fn() -> String) -> Result<f64, InventoryError> {
    let trimmed = value.trim();
    let parsed: f64 = trimmed.parse().map_err(|_| InventoryError::InvalidAmount {
        context: context(),
        value: value.to_string(),
        reason: "not a decimal number".into(),
    })?;
    if !parsed.is_finite() {
        return Err(InventoryError::InvalidAmount {
            context: context(),
            value: value.to_string(),
            reason: "amount must be finite".into(),
        });
    }
    Ok(parsed)
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.len() - before.rfind('\n').map_or(0, |i| i + 1) + 1;
    (line, column)
}

/// Parses and validates an inventory from text.
pub fn parse_process_graph(text: &str) -> Result<ProcessGraph, InventoryError> {
    let raw: RawFile = toml::from_str(text).map_err(|e| {
        let (line, column) = e.span().map_or((0, 0), |s| line_col(text, s.start));
        InventoryError::Parse {
            line,
            column,
            message: e.message().to_string(),
        }
    })?;

    let mut regions = BTreeMap::new();
    for c in raw.countries {
        if regions.insert(c.code.clone(), c.name).is_some() {
            return Err(InventoryError::Duplicate {
                kind: "country",
                id: c.code,
            });
        }
    }

    let mut mixes = Vec::with_capacity(raw.mixes.len());
    for m in raw.mixes {
        let mut shares = Vec::with_capacity(m.shares.len());
        for s in m.shares {
            let v = parse_decimal(&s.share, || format!("share of '{}' in mix {}", s.tech, m.region))?;
            shares.push((s.tech, v));
        }
        mixes.push(ElectricityMix::new(m.region, shares));
    }

    let mut activities = Vec::with_capacity(raw.activities.len());
    for a in raw.activities {
        let mut inputs = Vec::with_capacity(a.inputs.len());
        for i in a.inputs {
            let amount = parse_decimal(&i.amount, || format!("input '{}' of '{}'", i.id, a.id))?;
            inputs.push(Exchange {
                id: i.id,
                amount,
                unit: i.unit,
            });
        }
        let mut emissions = Vec::with_capacity(a.emissions.len());
        for e in a.emissions {
            let amount =
                parse_decimal(&e.amount, || format!("emission '{}' of '{}'", e.substance, a.id))?;
            emissions.push(Emission {
                substance: e.substance,
                amount,
            });
        }
        activities.push(Activity {
            id: a.id,
            name: a.name,
            location: a.location,
            unit: a.unit,
            stage: a.stage,
            inputs,
            emissions,
        });
    }

    let placeholders: BTreeSet<String> = raw.graph.electricity_placeholders.into_iter().collect();
    let graph = ProcessGraph::new(
        raw.graph.root,
        activities,
        raw.substances,
        placeholders,
        regions,
        mixes,
    )?;
    Ok(graph.with_meta(GraphMeta {
        name: raw.graph.name,
        notes: raw.graph.notes,
    }))
}

fn quote(s: &str) -> String {
    toml::Value::String(s.to_string()).to_string()
}

/// Writes the canonical text form: sections in a fixed order, countries,
/// substances, mixes and activities sorted by id, generated mix activities
/// omitted.
pub fn serialize_process_graph(graph: &ProcessGraph) -> String {
    let mut out = String::new();
    out.push_str("[graph]\n");
    let _ = writeln!(out, "name = {}", quote(&graph.meta.name));
    let _ = writeln!(out, "root = {}", quote(&graph.root));
    let placeholders: Vec<String> = graph.electricity_placeholders.iter().map(|p| quote(p)).collect();
    let _ = writeln!(out, "electricity_placeholders = [{}]", placeholders.join(", "));
    if graph.meta.notes.is_empty() {
        out.push_str("notes = []\n");
    } else {
        out.push_str("notes = [\n");
        for n in &graph.meta.notes {
            let _ = writeln!(out, "  {},", quote(n));
        }
        out.push_str("]\n");
    }

    for (code, name) in &graph.regions {
        let _ = write!(out, "\n[[countries]]\ncode = {}\nname = {}\n", quote(code), quote(name));
    }
    for s in graph.substances.values() {
        let _ = write!(out, "\n[[substances]]\nid = {}\nname = {}\n", quote(&s.id), quote(&s.name));
    }
    for m in graph.mixes.values() {
        let _ = write!(out, "\n[[mixes]]\nregion = {}\nshares = [\n", quote(&m.region));
        for (tech, share) in &m.shares {
            let _ = writeln!(
                out,
                "  {{ tech = {}, share = {} }},",
                quote(tech),
                quote(&share.to_string())
            );
        }
        out.push_str("]\n");
    }
    let generated: BTreeSet<String> = graph.mixes.values().map(|m| m.activity_id()).collect();
    for a in graph.activities.values().filter(|a| !generated.contains(&a.id)) {
        out.push_str("\n[[activities]]\n");
        let _ = writeln!(out, "id = {}", quote(&a.id));
        let _ = writeln!(out, "name = {}", quote(&a.name));
        let _ = writeln!(out, "location = {}", quote(&a.location));
        let _ = writeln!(out, "unit = {}", quote(&a.unit));
        if let Some(stage) = &a.stage {
            let _ = writeln!(out, "stage = {}", quote(stage));
        }
        if a.inputs.is_empty() {
            out.push_str("inputs = []\n");
        } else {
            out.push_str("inputs = [\n");
            for i in &a.inputs {
                let _ = writeln!(
                    out,
                    "  {{ id = {}, amount = {}, unit = {} }},",
                    quote(&i.id),
                    quote(&i.amount.to_string()),
                    quote(&i.unit)
                );
            }
            out.push_str("]\n");
        }
        if a.emissions.is_empty() {
            out.push_str("emissions = []\n");
        } else {
            out.push_str("emissions = [\n");
            for e in &a.emissions {
                let _ = writeln!(
                    out,
                    "  {{ substance = {}, amount = {} }},",
                    quote(&e.substance),
                    quote(&e.amount.to_string())
                );
            }
            out.push_str("]\n");
        }
    }
    out
}
