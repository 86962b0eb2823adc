//! Wardrop equilibria of the driver game, plain and induced by a fixed
//! controlled allocation.
//!
//! The search runs on the common profit level: each route's supply at a
//! level is the inverse of its non-increasing per-driver profit curve, and
//! their sum is non-increasing in the level. Where a route is indifferent
//! over an interval (a zero-advantage route on its linear segment, or a
//! zero-profit route) mass goes to the highest-ranked route first.

use crate::allocation::Allocation;
use crate::curve::DemandCurve;
use crate::error::{Error, Result};
use crate::model::{DerivedRoute, Instance};
use crate::solve::{Flat, LevelProblem};

pub const DEFAULT_TOL_EQ: f64 = 1e-8;

/// Fill order on tied flat segments: lower `ζ̃` ranks higher, ties by route id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RankOrder {
    /// Route indices, highest rank first.
    pub order: Vec<usize>,
}

impl RankOrder {
    pub fn canonical(instance: &Instance) -> Self {
        let d = instance.derived();
        let mut order: Vec<usize> = (0..d.len()).collect();
        order.sort_by(|&a, &b| {
            d[b].active
                .cmp(&d[a].active)
                .then(d[a].zeta_tilde.total_cmp(&d[b].zeta_tilde))
                .then_with(|| instance.routes[a].id.cmp(&instance.routes[b].id))
                .then(a.cmp(&b))
        });
        RankOrder { order }
    }

    pub fn reversed(&self) -> Self {
        RankOrder {
            order: self.order.iter().rev().cloned().collect(),
        }
    }
}

/// Per-driver profits `p_i·D_i(x)/x + τ_i` faced by privately operated drivers.
#[derive(Debug, Clone, PartialEq)]
pub struct DriverGame {
    pub curves: Vec<DemandCurve>,
    pub margins: Vec<f64>,
    pub transfers: Vec<f64>,
    pub rank: RankOrder,
}

impl DriverGame {
    pub fn new(curves: Vec<DemandCurve>, margins: Vec<f64>, rank: RankOrder) -> Self {
        let n = curves.len();
        DriverGame {
            curves,
            margins,
            transfers: vec![0.0; n],
            rank,
        }
    }

    pub fn with_transfers(mut self, tau: &[f64]) -> Result<Self> {
        if tau.len() != self.len() {
            return Err(Error::Dimension {
                expected: self.len(),
                got: tau.len(),
            });
        }
        self.transfers = tau.to_vec();
        Ok(self)
    }

    pub fn with_rank(mut self, rank: RankOrder) -> Self {
        self.rank = rank;
        self
    }

    pub fn len(&self) -> usize {
        self.curves.len()
    }

    pub fn is_empty(&self) -> bool {
        self.curves.is_empty()
    }

    fn earns_nothing(&self, i: usize) -> bool {
        self.margins[i] == 0.0 || self.curves[i].is_zero()
    }

    pub fn profit(&self, i: usize, x: f64) -> f64 {
        self.margins[i] * self.curves[i].per_driver(x) + self.transfers[i]
    }

    /// Largest total mass on route `i` at which it still pays `level`.
    fn supply(&self, i: usize, level: f64) -> f64 {
        let u = level - self.transfers[i];
        if self.earns_nothing(i) {
            return if u < 0.0 { f64::INFINITY } else { 0.0 };
        }
        let p = self.margins[i];
        let c = &self.curves[i];
        if u >= p * c.slope {
            0.0
        } else if u <= 0.0 {
            f64::INFINITY
        } else {
            c.inverse_per_driver(u / p)
        }
    }
}

impl Instance {
    pub fn driver_game(&self) -> DriverGame {
        DriverGame::new(self.curves(), self.margins(), RankOrder::canonical(self))
    }

    /// Drivers still maximize profit, but against the linearized demand.
    pub fn linearized_game(&self) -> DriverGame {
        DriverGame::new(
            self.linearized_curves(),
            self.margins(),
            RankOrder::canonical(self),
        )
    }
}

/// The set of supplies at which a route pays exactly `pi`.
///
/// A point except on a flat segment; `[0, 0]` when `pi` exceeds the profit
/// of the first driver.
pub fn supply_at_profit(dr: &DerivedRoute, pi: f64) -> (f64, f64) {
    let c = dr.curve();
    if dr.p == 0.0 || c.is_zero() {
        return if pi <= 0.0 { (0.0, f64::INFINITY) } else { (0.0, 0.0) };
    }
    let top = dr.p * c.slope;
    if pi > top {
        (0.0, 0.0)
    } else if c.is_flat() && pi == top {
        (0.0, c.threshold)
    } else {
        let x = c.inverse_per_driver(pi / dr.p);
        (x, x)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumResult {
    /// Offsets plus free drivers.
    pub allocation: Allocation,
    /// Free drivers only.
    pub free: Vec<f64>,
    pub pi_eq: f64,
    /// Routes carrying free drivers.
    pub supported: Vec<usize>,
    pub iterations: usize,
}

/// Equilibrium of `free_mass` drivers given fixed `offsets` (zero if `None`).
pub fn wardrop_equilibrium(
    game: &DriverGame,
    free_mass: f64,
    offsets: Option<&[f64]>,
    tol_eq: f64,
) -> Result<EquilibriumResult> {
    let n = game.len();
    let zeros = vec![0.0; n];
    let o = offsets.unwrap_or(&zeros);
    if o.len() != n {
        return Err(Error::Dimension {
            expected: n,
            got: o.len(),
        });
    }
    if !(free_mass >= 0.0) || o.iter().any(|v| !(*v >= 0.0)) {
        return Err(Error::Infeasible("masses must be non-negative".into()));
    }

    let top = (0..n)
        .map(|i| game.profit(i, o[i]))
        .fold(f64::NEG_INFINITY, f64::max);
    let floor = game.transfers.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut flats = Vec::new();
    for i in 0..n {
        if game.earns_nothing(i) {
            flats.push(Flat {
                level: game.transfers[i],
                route: i,
                lo: 0.0,
                hi: f64::INFINITY,
            });
        } else if game.curves[i].is_flat() && o[i] < game.curves[i].threshold {
            flats.push(Flat {
                level: game.transfers[i] + game.margins[i] * game.curves[i].slope,
                route: i,
                lo: 0.0,
                hi: game.curves[i].threshold - o[i],
            });
        }
    }
    let problem = LevelProblem {
        target: free_mass,
        point: |i: usize, v: f64| (game.supply(i, v) - o[i]).max(0.0),
        flats,
        fill_order: &game.rank.order,
        floor_level: floor,
        top_level: top,
        lower: &zeros,
    };
    let sol = problem.solve()?;
    let supported: Vec<usize> = (0..n).filter(|&i| sol.x[i] > 0.0).collect();
    let combined: Vec<f64> = sol.x.iter().zip(o).map(|(a, b)| a + b).collect();
    let scale = sol.level.abs().max(top.abs()).max(1e-300);
    if supported
        .iter()
        .any(|&i| (game.profit(i, combined[i]) - sol.level).abs() > tol_eq * scale)
    {
        return Err(Error::NonConvergence(sol.iterations));
    }
    Ok(EquilibriumResult {
        allocation: Allocation {
            total: free_mass + o.iter().sum::<f64>(),
            x: combined,
        },
        free: sol.x,
        pi_eq: sol.level,
        supported,
        iterations: sol.iterations,
    })
}

/// A pair `(from, to)` where a free driver on `from` would gain by moving.
#[derive(Debug, Clone, PartialEq)]
pub struct Deviation {
    pub from: usize,
    pub to: usize,
    pub profit_from: f64,
    pub profit_to: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumCheck {
    pub ok: bool,
    pub violations: Vec<Deviation>,
}

/// Every route carrying free drivers pays at least as much as any other, up to `tol` relative.
pub fn is_equilibrium(
    game: &DriverGame,
    full: &[f64],
    offsets: Option<&[f64]>,
    tol: f64,
) -> EquilibriumCheck {
    let n = game.len();
    let profits: Vec<f64> = (0..n).map(|i| game.profit(i, full[i])).collect();
    let mut violations = Vec::new();
    for i in 0..n {
        let offset = offsets.map_or(0.0, |o| o[i]);
        if full[i] - offset <= 0.0 {
            continue;
        }
        for j in 0..n {
            let scale = profits[i].abs().max(profits[j].abs()).max(1e-300);
            if profits[j] > profits[i] + tol * scale {
                violations.push(Deviation {
                    from: i,
                    to: j,
                    profit_from: profits[i],
                    profit_to: profits[j],
                });
            }
        }
    }
    EquilibriumCheck {
        ok: violations.is_empty(),
        violations,
    }
}

impl Instance {
    /// Canonical plain equilibrium of all `D` drivers.
    pub fn equilibrium(&self) -> Result<EquilibriumResult> {
        wardrop_equilibrium(&self.driver_game(), self.total_drivers(), None, DEFAULT_TOL_EQ)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{InstanceConfig, OutsideOption, RouteParams};
    use approx::assert_relative_eq;

    fn cfg(d: f64) -> InstanceConfig {
        InstanceConfig {
            capacity: 4.0,
            t1: 0.0,
            t2: 420.0,
            total_drivers: d,
            eta_e: 0.61,
            eta_l: 2.4,
            eta_t: 2.5,
            money_per_minute: 2.5,
        }
    }

    fn route(id: &str, s: f64) -> RouteParams {
        RouteParams {
            id: id.into(),
            fare: 10.0,
            travel_time: 10.0,
            trip_cost: 0.0,
            total_demand: 4200.0,
            outside: OutsideOption::Direct(s),
        }
    }

    #[test]
    fn supply_examples() {
        let inst = Instance::new(cfg(1.0), vec![route("a", 0.0), route("b", 30.0)]).unwrap();
        let (lin, vic) = (&inst.derived()[0], &inst.derived()[1]);
        assert_eq!(supply_at_profit(lin, 840.0), (0.0, 50.0));
        let (a, b) = supply_at_profit(lin, 420.0);
        assert_relative_eq!(a, 100.0, max_relative = 1e-12);
        assert_eq!(a, b);
        let (a, _) = supply_at_profit(vic, vic.per_driver_profit(25.0));
        assert_relative_eq!(a, 25.0, max_relative = 1e-12);
        assert_eq!(supply_at_profit(lin, 900.0), (0.0, 0.0));
    }

    #[test]
    fn supply_inverse_matches_independent_bisection() {
        let inst = Instance::new(cfg(1.0), vec![route("b", 30.0)]).unwrap();
        let d = &inst.derived()[0];
        let target = 901.68;
        let (mut lo, mut hi) = (0.0, d.k_tilde_star);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if d.per_driver_profit(mid) > target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let (x, _) = supply_at_profit(d, target);
        assert_relative_eq!(x, lo, max_relative = 1e-9);
        assert_relative_eq!(x, 25.0, max_relative = 1e-4);
    }

    #[test]
    fn identical_routes_split_evenly() {
        let inst = Instance::new(cfg(40.0), vec![route("a", 20.0), route("b", 20.0)]).unwrap();
        let eq = inst.equilibrium().unwrap();
        assert_relative_eq!(eq.allocation.x[0], 20.0, max_relative = 1e-9);
        assert_relative_eq!(eq.allocation.x[1], 20.0, max_relative = 1e-9);
    }

    #[test]
    fn single_route_takes_everything() {
        let inst = Instance::new(cfg(25.0), vec![route("v", 30.0)]).unwrap();
        let eq = inst.equilibrium().unwrap();
        assert_relative_eq!(eq.allocation.x[0], 25.0, max_relative = 1e-12);
        assert_relative_eq!(eq.pi_eq, 901.68, max_relative = 1e-4);
        assert_eq!(eq.supported, vec![0]);
    }

    #[test]
    fn flat_segment_levels_fill_by_rank() {
        // both S = 0 at the same level; 30 drivers fit within one route's flat segment
        let inst = Instance::new(cfg(30.0), vec![route("a", 0.0), route("b", 0.0)]).unwrap();
        let eq = inst.equilibrium().unwrap();
        assert_relative_eq!(eq.pi_eq, 840.0, max_relative = 1e-12);
        assert_eq!(eq.allocation.x, vec![30.0, 0.0]);
        let rev = wardrop_equilibrium(
            &inst.driver_game().with_rank(RankOrder::canonical(&inst).reversed()),
            30.0,
            None,
            DEFAULT_TOL_EQ,
        )
        .unwrap();
        assert_eq!(rev.allocation.x, vec![0.0, 30.0]);
    }

    #[test]
    fn offsets_shift_the_response() {
        let inst = Instance::new(cfg(40.0), vec![route("a", 20.0), route("b", 20.0)]).unwrap();
        let eq = wardrop_equilibrium(&inst.driver_game(), 30.0, Some(&[10.0, 0.0]), 1e-8).unwrap();
        assert_relative_eq!(eq.allocation.x[0], 20.0, max_relative = 1e-9);
        assert_relative_eq!(eq.free[0], 10.0, max_relative = 1e-9);
        assert_relative_eq!(eq.allocation.total, 40.0, max_relative = 1e-12);
        // a large offset leaves its route unattractive
        let eq = wardrop_equilibrium(&inst.driver_game(), 10.0, Some(&[200.0, 0.0]), 1e-8).unwrap();
        assert_eq!(eq.free[0], 0.0);
        assert_relative_eq!(eq.free[1], 10.0, max_relative = 1e-12);
    }

    #[test]
    fn equilibrium_check_flags_lopsided_allocation() {
        let inst = Instance::new(cfg(1.0), vec![route("a", 20.0), route("b", 20.0)]).unwrap();
        let g = inst.driver_game();
        let bad = is_equilibrium(&g, &[1.0, 0.0], None, 1e-9);
        assert!(!bad.ok);
        assert_eq!(bad.violations[0].from, 0);
        let eq = inst.equilibrium().unwrap();
        assert!(is_equilibrium(&g, &eq.allocation.x, None, 1e-9).ok);
    }

    #[test]
    fn zero_mass_is_empty() {
        let inst = Instance::new(cfg(1.0), vec![route("a", 20.0)]).unwrap();
        let eq = wardrop_equilibrium(&inst.driver_game(), 0.0, None, 1e-8).unwrap();
        assert_eq!(eq.allocation.x, vec![0.0]);
        assert!(eq.supported.is_empty());
    }

    #[test]
    fn zero_profit_routes_absorb_leftovers_only() {
        let mut free = route("z", 10.0);
        free.trip_cost = 40.0;
        let inst = Instance::new(cfg(5.0), vec![free.clone()]).unwrap();
        let eq = inst.equilibrium().unwrap();
        assert_eq!(eq.pi_eq, 0.0);
        assert_eq!(eq.allocation.x, vec![5.0]);
        let inst = Instance::new(cfg(5.0), vec![free, route("a", 10.0)]).unwrap();
        let eq = inst.equilibrium().unwrap();
        assert_eq!(eq.allocation.x[0], 0.0);
        assert!(eq.pi_eq > 0.0);
    }
}
