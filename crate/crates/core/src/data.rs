//! Bundled data files.

/// Cradle-to-gate inventory of 1 m² of mono-Si panel, silicon chain in
/// China and final assembly in the Netherlands.
pub const PANEL_CN_NL_INV: &str = include_str!("../data/panel_cn_nl.inv");
pub const GWP100_METHOD: &str = include_str!("../data/gwp100.toml");
pub const COUNTRIES_CSV: &str = include_str!("../data/countries.csv");
/// WLTC class 3b speed trace, 1 Hz.
pub const WLTC_CLASS3_CSV: &str = include_str!("../data/wltc_class3b.csv");
pub const HARMONIZATION: &str = include_str!("../data/harmonization.toml");
