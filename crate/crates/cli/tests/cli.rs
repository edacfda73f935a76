use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn vipv(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vipv"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(args: &[&str]) -> String {
    let out = vipv(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn json(args: &[&str]) -> Value {
    serde_json::from_str(&stdout(args)).unwrap()
}

fn data_rows(csv: &str) -> Vec<Vec<String>> {
    csv.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(String::from).collect())
        .collect()
}

fn golden_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

#[test]
fn missing_file_exits_2_and_names_the_path() {
    let out = vipv(&["lca", "--inventory", "no/such/panel.inv"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("no/such/panel.inv"));
}

#[test]
fn invalid_values_exit_2() {
    for args in [
        &["design", "--k-hi", "1.5"][..],
        &["compare", "--country", "XX"],
        &["lca", "--stage", "panel=ZZ"],
        &["lca", "--stage", "nosuchstage=NL"],
        &["sweep", "--areas", "3:0:1"],
        &["compare", "--panel-area", "5"],
    ] {
        let out = vipv(args);
        assert_eq!(out.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn infeasible_requirements_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("fast.toml");
    std::fs::write(&cfg, "[model.reqs]\nmax_accel_time_s = 0.2\n").unwrap();
    let out = vipv(&["design", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("acceleration"));
}

#[test]
fn stage_overrides_are_echoed_in_provenance() {
    let doc = json(&["lca", "--stage", "panel=NL", "--stage", "wafer=CN", "--stage", "cell=DE"]);
    let production = &doc["provenance"]["config"]["production"];
    assert_eq!(production["panel"], "NL");
    assert_eq!(production["wafer"], "CN");
    assert_eq!(production["cell"], "DE");
    let inputs = doc["provenance"]["inputs"].as_array().unwrap();
    assert!(inputs.iter().all(|i| i["sha256"].as_str().unwrap().len() == 64));
}

#[test]
fn lca_reports_the_bundled_fixture() {
    let doc = json(&["lca"]);
    let total = doc["result"]["impact"]["total"].as_f64().unwrap();
    assert!((total - 118.0).abs() < 0.5);
    assert_eq!(doc["result"]["stages"][0]["stage"], "panel");
}

#[test]
fn bev_design_has_no_panel() {
    let doc = json(&["design", "--bev"]);
    assert_eq!(doc["result"]["design"]["vars"]["panel_cells"].as_f64(), Some(0.0));
    assert_eq!(doc["provenance"]["config"]["design"]["bev"], true);
}

#[test]
fn sweep_emits_the_requested_grid() {
    let csv = stdout(&["sweep", "--areas", "0:3:0.5", "--lifetimes", "0:300000:25000"]);
    let header = csv.lines().find(|l| !l.starts_with('#')).unwrap();
    assert_eq!(header, "area_m2,lifetime_km,relative_delta");
    let rows = data_rows(&csv);
    assert_eq!(rows.len(), 7 * 13);
    let areas: std::collections::BTreeSet<&str> = rows.iter().map(|r| r[0].as_str()).collect();
    assert_eq!(areas.len(), 7);
    assert_eq!(csv.lines().filter(|l| l.starts_with("# tipping")).count(), 7);
}

#[test]
fn map_has_one_row_per_country() {
    let table = Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/data/countries.csv");
    let csv = stdout(&["map", "--countries", table.to_str().unwrap(), "--lifetime", "150000"]);
    let expected = std::fs::read_to_string(&table)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
        .count()
        - 1;
    let rows = data_rows(&csv);
    assert_eq!(rows.len(), expected);
    assert!(rows.iter().all(|r| r.len() == 4));
}

#[test]
fn identical_runs_are_byte_identical() {
    for args in [&["lca", "--stage", "panel=CN"][..], &["design"], &["compare", "--country", "SE"]] {
        assert_eq!(stdout(args), stdout(args), "{args:?}");
    }
}

#[test]
fn embedded_config_replays_bit_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("first.json");
    stdout(&[
        "compare",
        "--country",
        "ES",
        "--stage",
        "panel=CN",
        "--panel-area",
        "1.5",
        "--lifetime",
        "200000",
        "--out",
        first.to_str().unwrap(),
    ]);
    let replay = stdout(&["compare", "--config", first.to_str().unwrap()]);
    assert_eq!(std::fs::read_to_string(&first).unwrap(), replay);

    let csv = dir.path().join("sweep.csv");
    stdout(&["sweep", "--country", "SE", "--areas", "1:3:1", "--lifetimes", "1e5", "--out", csv.to_str().unwrap()]);
    let replay = stdout(&["sweep", "--config", csv.to_str().unwrap()]);
    assert_eq!(std::fs::read_to_string(&csv).unwrap(), replay);
}

#[test]
fn toml_overlay_and_flags_compose() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "[scenario]\ncountry = \"SE\"\nlifetime_km = 90000.0\n").unwrap();
    let doc = json(&["compare", "--config", cfg.to_str().unwrap(), "--lifetime", "120000"]);
    assert_eq!(doc["result"]["country"], "SE");
    assert_eq!(doc["result"]["lifetime_km"].as_f64(), Some(120000.0));
}

/// Numbers agree to a relative tolerance; everything else must match exactly.
fn assert_close(got: &Value, want: &Value, path: &str, rel: f64) {
    match (got, want) {
        (Value::Number(g), Value::Number(w)) => {
            let (g, w) = (g.as_f64().unwrap(), w.as_f64().unwrap());
            assert!((g - w).abs() <= rel * w.abs().max(1.0), "{path}: {g} vs golden {w}");
        }
        (Value::Object(g), Value::Object(w)) => {
            assert_eq!(g.keys().collect::<Vec<_>>(), w.keys().collect::<Vec<_>>(), "{path}");
            for (k, wv) in w {
                assert_close(&g[k], wv, &format!("{path}.{k}"), rel);
            }
        }
        (Value::Array(g), Value::Array(w)) => {
            assert_eq!(g.len(), w.len(), "{path}");
            for (i, (gv, wv)) in g.iter().zip(w).enumerate() {
                assert_close(gv, wv, &format!("{path}[{i}]"), rel);
            }
        }
        _ => assert_eq!(got, want, "{path}"),
    }
}

fn csv_as_json(csv: &str) -> Value {
    Value::Array(
        data_rows(csv)
            .into_iter()
            .map(|r| {
                Value::Array(
                    r.into_iter()
                        .map(|c| c.parse::<f64>().map(Value::from).unwrap_or(Value::String(c)))
                        .collect(),
                )
            })
            .collect(),
    )
}

/// Goldens were produced by the bundled scenarios once their results had
/// passed the oracle checks; `VIPV_BLESS=1` rewrites them.
#[test]
fn golden_outputs() {
    let cases: [(&str, &[&str], f64); 4] = [
        ("lca.json", &["lca"], 1e-10),
        ("design_nl.json", &["design", "--country", "NL"], 1e-6),
        ("compare_nl.json", &["compare", "--country", "NL"], 1e-6),
        ("map.csv", &["map"], 1e-6),
    ];
    let bless = std::env::var_os("VIPV_BLESS").is_some();
    for (file, args, rel) in cases {
        let path = golden_dir().join(file);
        let got = stdout(args);
        if bless {
            std::fs::create_dir_all(golden_dir()).unwrap();
            std::fs::write(&path, &got).unwrap();
            continue;
        }
        let want = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        if file.ends_with(".csv") {
            let header = |s: &str| s.lines().take_while(|l| l.starts_with('#')).map(String::from).collect::<Vec<_>>();
            assert_eq!(header(&got), header(&want), "{file} header");
            assert_close(&csv_as_json(&got), &csv_as_json(&want), file, rel);
        } else {
            let (g, w): (Value, Value) = (serde_json::from_str(&got).unwrap(), serde_json::from_str(&want).unwrap());
            assert_eq!(g["provenance"], w["provenance"], "{file} provenance");
            assert_close(&g["result"], &w["result"], file, rel);
        }
    }
}
