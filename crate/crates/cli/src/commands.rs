use std::fmt::Write as _;
use std::time::Instant;

use serde::Serialize;
use vipv_core::comparator::{Breakeven, Comparator, ComparisonResult, Scenario};
use vipv_core::data;
use vipv_core::inventory::{parse_country_profiles, parse_method, parse_process_graph, CharacterizationMethod, CountryProfile, ProcessGraph};
use vipv_core::lca::{assess, stage_contributions, HarmonizationParams, ImpactResult, StageContribution};
use vipv_core::powertrain::{design as solve_design, DesignResult, DriveCycle};

use crate::config::RunConfig;
use crate::error::CliError;
use crate::provenance::Provenance;

fn load_graph(prov: &mut Provenance, cfg: &RunConfig) -> Result<ProcessGraph, CliError> {
    let text = prov.load("inventory", cfg.inputs.inventory.as_deref(), data::PANEL_CN_NL_INV, "panel_cn_nl.inv")?;
    Ok(parse_process_graph(&text)?)
}

fn load_method(prov: &mut Provenance, cfg: &RunConfig) -> Result<CharacterizationMethod, CliError> {
    let text = prov.load("method", cfg.inputs.method.as_deref(), data::GWP100_METHOD, "gwp100.toml")?;
    Ok(parse_method(&text)?)
}

fn load_countries(prov: &mut Provenance, cfg: &RunConfig) -> Result<Vec<CountryProfile>, CliError> {
    let text = prov.load("countries", cfg.inputs.countries.as_deref(), data::COUNTRIES_CSV, "countries.csv")?;
    Ok(parse_country_profiles(&text)?)
}

fn load_cycle(prov: &mut Provenance, cfg: &RunConfig) -> Result<DriveCycle, CliError> {
    let text = prov.load("cycle", cfg.inputs.cycle.as_deref(), data::WLTC_CLASS3_CSV, "wltc_class3b.csv")?;
    Ok(DriveCycle::parse_csv(&text)?)
}

/// Country of use with the configured irradiation override applied.
fn use_country(prov: &mut Provenance, cfg: &RunConfig) -> Result<CountryProfile, CliError> {
    let countries = load_countries(prov, cfg)?;
    let mut c = countries
        .into_iter()
        .find(|c| c.country == cfg.scenario.country)
        .ok_or_else(|| CliError::Input(format!("country '{}' is not in the country table", cfg.scenario.country)))?;
    if let Some(k) = cfg.scenario.k_hi {
        c.k_hi = k;
        c.validate().map_err(CliError::Input)?;
    }
    Ok(c)
}

fn scenario(cfg: &RunConfig, country: CountryProfile) -> Scenario {
    Scenario {
        production_locations: cfg.production.clone(),
        use_country: country,
        lifetime_km: cfg.scenario.lifetime_km,
        panel_area: cfg.scenario.panel_area,
    }
}

fn timed<T>(label: &str, f: impl FnOnce() -> T) -> T {
    let start = Instant::now();
    let out = f();
    eprintln!("{label}: {:.3} s", start.elapsed().as_secs_f64());
    out
}

#[derive(Serialize)]
struct LcaReport {
    impact: ImpactResult,
    /// Stages by descending contribution.
    stages: Vec<StageContribution>,
    harmonized_g_per_kwh: f64,
    reference_g_per_kwh: f64,
    gap_to_reference: f64,
}

pub fn lca(cfg: &RunConfig) -> Result<String, CliError> {
    let mut prov = Provenance::new("lca", cfg);
    let graph = load_graph(&mut prov, cfg)?;
    let method = load_method(&mut prov, cfg)?;
    let harmonization = HarmonizationParams::parse(&prov.load(
        "harmonization",
        None,
        data::HARMONIZATION,
        "harmonization.toml",
    )?)?;
    let impact = assess(&graph, &cfg.production, &method)?;
    let harmonized = harmonization.harmonize(impact.total_kg_co2eq, cfg.model.cell.power_density())?;
    let report = LcaReport {
        stages: stage_contributions(&impact),
        impact,
        harmonized_g_per_kwh: harmonized,
        reference_g_per_kwh: harmonization.reference_g_per_kwh,
        gap_to_reference: harmonization.gap_to_reference(harmonized),
    };
    Ok(prov.json_document(&report))
}

#[derive(Serialize)]
struct DesignReport<'a> {
    country: &'a str,
    design: &'a DesignResult,
}

pub fn design(cfg: &RunConfig) -> Result<String, CliError> {
    let mut prov = Provenance::new("design", cfg);
    let cycle = load_cycle(&mut prov, cfg)?;
    let country = use_country(&mut prov, cfg)?;
    let m = &cfg.model;
    let fixed = if cfg.design.bev {
        Some(0.0)
    } else {
        cfg.scenario.panel_area.fixed_cells(&m.cell)
    };
    let result = timed("solve", || {
        solve_design(&cycle, &m.params, &m.cell, &m.reqs, country.k_hi, fixed)
    })?;
    Ok(prov.json_document(&DesignReport {
        country: &country.country,
        design: &result,
    }))
}

pub fn compare(cfg: &RunConfig) -> Result<String, CliError> {
    let mut prov = Provenance::new("compare", cfg);
    let graph = load_graph(&mut prov, cfg)?;
    let method = load_method(&mut prov, cfg)?;
    let cycle = load_cycle(&mut prov, cfg)?;
    let country = use_country(&mut prov, cfg)?;
    let comparator = Comparator::new(&graph, &method, &cycle, cfg.model.clone())?;
    let result: ComparisonResult = timed("compare", || comparator.compare(&scenario(cfg, country)))?;
    Ok(prov.json_document(&result))
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn breakeven_cell(b: Breakeven) -> String {
    match b {
        Breakeven::Km(km) => km.to_string(),
        Breakeven::Never => "never".into(),
    }
}

pub fn sweep(cfg: &RunConfig) -> Result<String, CliError> {
    let mut prov = Provenance::new("sweep", cfg);
    let graph = load_graph(&mut prov, cfg)?;
    let method = load_method(&mut prov, cfg)?;
    let cycle = load_cycle(&mut prov, cfg)?;
    let country = use_country(&mut prov, cfg)?;
    let comparator = Comparator::new(&graph, &method, &cycle, cfg.model.clone())?;
    let result = timed("sweep", || {
        comparator.sweep(&scenario(cfg, country), &cfg.sweep.areas, &cfg.sweep.lifetimes)
    })?;
    let mut out = prov.csv_header();
    for (area, tipping) in result.areas.iter().zip(&result.tipping) {
        let _ = writeln!(out, "# tipping area_m2={area} breakeven_km={}", breakeven_cell(*tipping));
    }
    out.push_str("area_m2,lifetime_km,relative_delta\n");
    for (i, area) in result.areas.iter().enumerate() {
        for (j, lifetime) in result.lifetimes.iter().enumerate() {
            let _ = writeln!(out, "{area},{lifetime},{}", opt(result.relative_delta(i, j)));
        }
    }
    Ok(out)
}

pub fn map(cfg: &RunConfig) -> Result<String, CliError> {
    let mut prov = Provenance::new("map", cfg);
    let graph = load_graph(&mut prov, cfg)?;
    let method = load_method(&mut prov, cfg)?;
    let cycle = load_cycle(&mut prov, cfg)?;
    let countries = load_countries(&mut prov, cfg)?;
    let comparator = Comparator::new(&graph, &method, &cycle, cfg.model.clone())?;
    let template = scenario(cfg, countries.first().cloned().ok_or_else(|| CliError::Input("country table is empty".into()))?);
    let rows = timed("map", || {
        comparator.country_map(&template, &countries, cfg.scenario.lifetime_km)
    })?;
    let mut out = prov.csv_header();
    out.push_str("country,delta_kg,relative_delta,breakeven_km\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            r.country,
            r.delta_kg,
            opt(r.relative_delta),
            breakeven_cell(r.breakeven)
        );
    }
    Ok(out)
}
