//! Rescales the bundled panel inventory to its calibration targets.
//!
//! Stage electricity inputs are multiplied by one factor and transport inputs
//! by another, so that one m² totals `TARGET_TOTAL` kg CO₂eq with a transport
//! share of `TARGET_TRANSPORT_SHARE`. Both contributions are linear in their
//! factor, so three evaluations determine the factors exactly. The result is
//! written back in canonical form.
//!
//! Run: `cargo run -p vipv-core --example calibrate_inventory [path]`

use std::collections::BTreeMap;

use vipv_core::data;
use vipv_core::inventory::{
    parse_method, parse_process_graph, serialize_process_graph, Activity, CharacterizationMethod,
    GraphMeta, ProcessGraph, TRANSPORT_UNIT,
};
use vipv_core::lca::assess;

const TARGET_TOTAL: f64 = 118.0;
const TARGET_TRANSPORT_SHARE: f64 = 0.0081;
const SIGNIFICANT_DIGITS: i32 = 5;

fn round_sig(v: f64) -> f64 {
    if v == 0.0 {
        return 0.0;
    }
    let scale = 10f64.powi(SIGNIFICANT_DIGITS - 1 - v.abs().log10().floor() as i32);
    let r = (v * scale).round() / scale;
    // Re-parse the shortest representation so the file holds clean decimals.
    format!("{r}").parse().unwrap()
}

fn rescale(g: &ProcessGraph, electricity: f64, transport: f64, round: bool) -> ProcessGraph {
    let generated: Vec<String> = g.mixes().values().map(|m| m.activity_id()).collect();
    let activities: Vec<Activity> = g
        .activities()
        .values()
        .filter(|a| !generated.contains(&a.id))
        .map(|a| {
            let mut a = a.clone();
            let is_stage = a.stage.is_some();
            for input in &mut a.inputs {
                if is_stage && g.electricity_placeholders().contains(&input.id) {
                    input.amount *= electricity;
                } else if input.unit == TRANSPORT_UNIT {
                    input.amount *= transport;
                }
                if round {
                    input.amount = round_sig(input.amount);
                }
            }
            a
        })
        .collect();
    ProcessGraph::new(
        g.root(),
        activities,
        g.substances().values().cloned().collect(),
        g.electricity_placeholders().clone(),
        g.regions().clone(),
        g.mixes().values().cloned().collect(),
    )
    .expect("rescaled inventory stays valid")
    .with_meta(g.meta().clone())
}

fn evaluate(g: &ProcessGraph, method: &CharacterizationMethod) -> (f64, f64) {
    let r = assess(g, &BTreeMap::new(), method).expect("inventory assesses");
    (r.total_kg_co2eq, r.total_kg_co2eq * r.transport_share)
}

fn main() {
    let path = std::env::args()
        .nth(1)
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/data/panel_cn_nl.inv").to_string());
    let text = std::fs::read_to_string(&path).expect("inventory readable");
    let graph = parse_process_graph(&text).expect("inventory parses");
    let method = parse_method(data::GWP100_METHOD).expect("method parses");

    let (total, transport) = evaluate(&graph, &method);
    let (without_electricity, _) = evaluate(&rescale(&graph, 0.0, 1.0, false), &method);
    let electricity_part = total - without_electricity;
    let rest = without_electricity - transport;

    let tau = TARGET_TOTAL * TARGET_TRANSPORT_SHARE / transport;
    let alpha = (TARGET_TOTAL - TARGET_TOTAL * TARGET_TRANSPORT_SHARE - rest) / electricity_part;
    println!("before: total {total:.4} kg, transport {transport:.4} kg, stage electricity {electricity_part:.4} kg");
    println!("factors: electricity {alpha:.6}, transport {tau:.6}");

    let calibrated = rescale(&graph, alpha, tau, true);
    let notes = vec![
        format!(
            "Calibrated fixture: stage electricity inputs scaled by {alpha:.4} and transport inputs by {tau:.4} \
             so that 1 m2 totals {TARGET_TOTAL} kg CO2eq with a {:.2}% transport share under the bundled GWP100 method.",
            TARGET_TRANSPORT_SHARE * 100.0
        ),
        "Process amounts are representative literature-scale values for a mono-Si chain; \
         they are not an independent inventory."
            .to_string(),
        format!("Amounts rounded to {SIGNIFICANT_DIGITS} significant digits after scaling."),
    ];
    let calibrated = calibrated.with_meta(GraphMeta {
        name: graph.meta().name.clone(),
        notes,
    });
    let (total, transport) = evaluate(&calibrated, &method);
    println!(
        "after: total {total:.4} kg, transport share {:.4}%",
        100.0 * transport / total
    );
    std::fs::write(&path, serialize_process_graph(&calibrated)).expect("inventory writable");
}
