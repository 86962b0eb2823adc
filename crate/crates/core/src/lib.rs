//! Informal-transit market model.
//!
//! Riders queue for minibuses under a bottleneck-style schedule model, which
//! gives each route a concave served-demand curve in its driver supply.
//! Drivers choose routes selfishly. On top of that model this crate computes
//! driver equilibria, profit- and welfare-optimal allocations, budget-balanced
//! transfers that implement any target allocation, and allocation rules for a
//! centrally controlled fraction of the fleet.

pub mod allocation;
pub mod analysis;
pub mod curve;
pub mod equilibrium;
pub mod error;
pub mod model;
pub mod optimize;
pub mod sample;
pub mod scenario;
pub mod stackelberg;
pub mod subsidy;
mod solve;

pub use allocation::Allocation;
pub use curve::DemandCurve;
pub use equilibrium::{
    is_equilibrium, supply_at_profit, wardrop_equilibrium, DriverGame, EquilibriumResult,
    RankOrder,
};
pub use error::{Error, Result};
pub use model::{
    derive_route, instance_gamma, DerivedRoute, Instance, InstanceConfig, OutsideOption,
    RouteParams, ScheduleReport,
};
pub use optimize::{objective_value, optimize_allocation, Objective};
