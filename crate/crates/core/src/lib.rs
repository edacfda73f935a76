//! Life-cycle greenhouse-gas comparison of vehicle-integrated photovoltaics
//! against battery-electric vehicles.
//!
//! - [`inventory`]: process graphs, characterization methods, country profiles.
//! - [`lca`]: cumulative inventory solve and characterization.
//! - [`powertrain`]: convex joint sizing of motor, battery and panel.
//! - [`comparator`]: total emissions, break-even lifetimes, sweeps.

pub mod comparator;
pub mod data;
pub mod inventory;
pub mod lca;
pub mod powertrain;
