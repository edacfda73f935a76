//! `vipv`: life-cycle emissions of solar-integrated versus battery-electric cars.

mod commands;
mod config;
mod error;
mod provenance;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use vipv_core::comparator::PanelArea;

use crate::config::{parse_panel_area, parse_range, parse_stage, RunConfig};
use crate::error::CliError;

#[derive(Parser)]
#[command(name = "vipv", version, about = "Life-cycle GHG comparison of VIPV and battery-electric vehicles")]
struct Cli {
    /// Config overlay (TOML or JSON). A previous JSON or CSV output can be
    /// passed to replay its embedded config.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Cradle-to-gate impact of 1 m² of panel.
    Lca {
        #[command(flatten)]
        lca: LcaArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Optimal motor, battery and panel sizing over the drive cycle.
    Design {
        #[command(flatten)]
        usage: UseArgs,
        /// Battery-electric baseline without a panel.
        #[arg(long)]
        bev: bool,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Solar versus battery-electric totals for one country.
    Compare {
        #[command(flatten)]
        lca: LcaArgs,
        #[command(flatten)]
        usage: UseArgs,
        /// Vehicle lifetime, km.
        #[arg(long)]
        lifetime: Option<f64>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Relative difference over panel areas and lifetimes (CSV).
    Sweep {
        #[command(flatten)]
        lca: LcaArgs,
        #[command(flatten)]
        usage: UseArgs,
        /// Panel areas in m², `start:stop:step` or a single value.
        #[arg(long, value_name = "RANGE")]
        areas: Option<String>,
        /// Lifetimes in km, `start:stop:step` or a single value.
        #[arg(long, value_name = "RANGE")]
        lifetimes: Option<String>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// One comparison per country of the table (CSV).
    Map {
        #[command(flatten)]
        lca: LcaArgs,
        #[command(flatten)]
        usage: UseArgs,
        /// Vehicle lifetime, km.
        #[arg(long)]
        lifetime: Option<f64>,
        #[command(flatten)]
        out: OutArgs,
    },
}

#[derive(Args)]
struct LcaArgs {
    /// Inventory file; defaults to the bundled panel inventory.
    #[arg(long, value_name = "FILE")]
    inventory: Option<String>,
    /// Characterization method file; defaults to the bundled GWP100 factors.
    #[arg(long, value_name = "FILE")]
    method: Option<String>,
    /// Production region of a stage, e.g. `--stage panel=NL`. Repeatable.
    #[arg(long = "stage", value_name = "STAGE=REGION", value_parser = parse_stage)]
    stages: Vec<(String, String)>,
}

#[derive(Args)]
struct UseArgs {
    /// Drive cycle CSV (`t_s,v_mps`); defaults to WLTC class 3b.
    #[arg(long, value_name = "FILE")]
    cycle: Option<String>,
    /// Country table CSV; defaults to the bundled table.
    #[arg(long, value_name = "FILE")]
    countries: Option<String>,
    /// Country of use.
    #[arg(long)]
    country: Option<String>,
    /// Irradiation coefficient, overriding the country's value.
    #[arg(long)]
    k_hi: Option<f64>,
    /// `optimal` or a fixed panel area in m².
    #[arg(long, value_parser = parse_panel_area)]
    panel_area: Option<PanelArea>,
    /// Grid-to-battery efficiency applied to operational emissions.
    #[arg(long)]
    charger_efficiency: Option<f64>,
}

#[derive(Args)]
struct OutArgs {
    /// Output file; standard output if omitted.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

impl LcaArgs {
    fn apply(self, cfg: &mut RunConfig) {
        if self.inventory.is_some() {
            cfg.inputs.inventory = self.inventory;
        }
        if self.method.is_some() {
            cfg.inputs.method = self.method;
        }
        cfg.production.extend(self.stages);
    }
}

impl UseArgs {
    fn apply(self, cfg: &mut RunConfig) {
        if self.cycle.is_some() {
            cfg.inputs.cycle = self.cycle;
        }
        if self.countries.is_some() {
            cfg.inputs.countries = self.countries;
        }
        if let Some(c) = self.country {
            cfg.scenario.country = c;
        }
        if self.k_hi.is_some() {
            cfg.scenario.k_hi = self.k_hi;
        }
        if let Some(a) = self.panel_area {
            cfg.scenario.panel_area = a;
        }
        if let Some(e) = self.charger_efficiency {
            cfg.model.charger_efficiency = e;
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut cfg = RunConfig::resolve(cli.config.as_deref())?;
    let (text, out) = match cli.command {
        Command::Lca { lca, out } => {
            lca.apply(&mut cfg);
            (commands::lca(&cfg)?, out)
        }
        Command::Design { usage, bev, out } => {
            usage.apply(&mut cfg);
            cfg.design.bev |= bev;
            (commands::design(&cfg)?, out)
        }
        Command::Compare {
            lca,
            usage,
            lifetime,
            out,
        } => {
            lca.apply(&mut cfg);
            usage.apply(&mut cfg);
            if let Some(l) = lifetime {
                cfg.scenario.lifetime_km = l;
            }
            (commands::compare(&cfg)?, out)
        }
        Command::Sweep {
            lca,
            usage,
            areas,
            lifetimes,
            out,
        } => {
            lca.apply(&mut cfg);
            usage.apply(&mut cfg);
            if let Some(a) = areas {
                cfg.sweep.areas = parse_range(&a).map_err(CliError::Input)?;
            }
            if let Some(l) = lifetimes {
                cfg.sweep.lifetimes = parse_range(&l).map_err(CliError::Input)?;
            }
            (commands::sweep(&cfg)?, out)
        }
        Command::Map {
            lca,
            usage,
            lifetime,
            out,
        } => {
            lca.apply(&mut cfg);
            usage.apply(&mut cfg);
            if let Some(l) = lifetime {
                cfg.scenario.lifetime_km = l;
            }
            (commands::map(&cfg)?, out)
        }
    };
    match out.out {
        Some(path) => std::fs::write(&path, text)
            .map_err(|e| CliError::Input(format!("{}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("vipv: {e}");
            e.exit_code()
        }
    }
}
