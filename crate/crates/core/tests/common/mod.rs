//! Random technosphere graphs and reference solvers that share no code with
//! the library's linear algebra.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use vipv_core::inventory::{Activity, Emission, Exchange, ProcessGraph, Substance};

/// A random graph together with its technosphere matrix `a[i][j]` (amount of
/// node `i` consumed per unit of node `j`) and direct CO₂ per node.
pub struct RandomGraph {
    pub graph: ProcessGraph,
    pub ids: Vec<String>,
    pub a: Vec<Vec<f64>>,
    pub co2: Vec<f64>,
}

pub fn node_id(i: usize) -> String {
    format!("p{i:02}")
}

fn build(a: &[Vec<f64>], co2: &[f64]) -> RandomGraph {
    let n = a.len();
    let ids: Vec<String> = (0..n).map(node_id).collect();
    let activities = (0..n)
        .map(|j| Activity {
            id: ids[j].clone(),
            name: ids[j].clone(),
            location: "GLO".into(),
            unit: "kg".into(),
            stage: (j == 0).then(|| "root".to_string()),
            inputs: (0..n)
                .filter(|&i| a[i][j] != 0.0)
                .map(|i| Exchange {
                    id: ids[i].clone(),
                    amount: a[i][j],
                    unit: "kg".into(),
                })
                .collect(),
            emissions: vec![Emission {
                substance: "co2".into(),
                amount: co2[j],
            }],
        })
        .collect();
    let graph = ProcessGraph::new(
        ids[0].clone(),
        activities,
        vec![Substance {
            id: "co2".into(),
            name: "carbon dioxide".into(),
        }],
        BTreeSet::new(),
        BTreeMap::from([("GLO".to_string(), "Global".to_string())]),
        vec![],
    )
    .expect("generated graph is valid");
    RandomGraph {
        graph,
        ids,
        a: a.to_vec(),
        co2: co2.to_vec(),
    }
}

/// Node `j` only consumes nodes `i > j`, so the graph is acyclic.
pub fn acyclic(rng: &mut impl Rng, n: usize) -> RandomGraph {
    let mut a = vec![vec![0.0; n]; n];
    for j in 0..n {
        for i in j + 1..n {
            if rng.gen_bool(0.3) {
                a[i][j] = rng.gen_range(0.0..2.0);
            }
        }
    }
    let co2: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..5.0)).collect();
    build(&a, &co2)
}

/// Arbitrary sparsity including self-loops; every column sum is below 0.85,
/// which bounds the spectral radius by 0.85.
pub fn cyclic(rng: &mut impl Rng, n: usize) -> RandomGraph {
    let mut a = vec![vec![0.0; n]; n];
    for j in 0..n {
        for row in a.iter_mut() {
            if rng.gen_bool(0.35) {
                row[j] = rng.gen_range(0.0..1.0);
            }
        }
        let sum: f64 = (0..n).map(|i| a[i][j]).sum();
        if sum > 0.0 {
            let target = rng.gen_range(0.05..0.85);
            for row in a.iter_mut() {
                row[j] *= target / sum;
            }
        }
    }
    let co2: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..5.0)).collect();
    build(&a, &co2)
}

/// Activity levels for one unit of node 0 in an acyclic graph, solved
/// consumer-first: every consumer of node `i` has a smaller index.
pub fn back_substitution(a: &[Vec<f64>]) -> Vec<f64> {
    let n = a.len();
    let mut x = vec![0.0; n];
    x[0] = 1.0;
    for i in 1..n {
        x[i] = (0..i).map(|j| a[i][j] * x[j]).sum();
    }
    x
}

/// Σₖ Aᵏ f, truncated once a term is negligible against the running sum.
pub fn power_series(a: &[Vec<f64>], f: &[f64]) -> Vec<f64> {
    let n = a.len();
    let mut x = vec![0.0; n];
    let mut term = f.to_vec();
    for _ in 0..100_000 {
        for (xi, ti) in x.iter_mut().zip(&term) {
            *xi += ti;
        }
        let next: Vec<f64> = (0..n).map(|i| (0..n).map(|j| a[i][j] * term[j]).sum()).collect();
        term = next;
        let scale = x.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        if term.iter().all(|t| t.abs() <= 1e-18 * scale) {
            break;
        }
    }
    x
}

/// Largest relative deviation, normalized by the largest reference level.
pub fn max_rel_error(got: &BTreeMap<String, f64>, ids: &[String], want: &[f64]) -> f64 {
    let scale = want.iter().fold(0.0_f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    ids.iter()
        .zip(want)
        .map(|(id, w)| (got[id] - w).abs() / scale)
        .fold(0.0, f64::max)
}
