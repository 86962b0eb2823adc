//! Optimum-to-equilibrium ratios, their worst-case constructions and a
//! bound certifier.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{Instance, InstanceConfig, OutsideOption, RouteParams};
use crate::optimize::{objective_value, optimize_allocation, Objective};
use crate::scenario::serialize_instance;

pub const PROFIT_BOUND: f64 = 2.0;
/// Slack allowed above a proven bound.
pub const BOUND_SLACK: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq)]
pub struct RatioReport {
    pub profit_ratio: f64,
    pub welfare_ratio: f64,
    pub p_max_over_p_min: f64,
    pub bound_profit: f64,
    pub bound_welfare: f64,
    pub eq_per_driver_profit: f64,
    pub opt_profit: f64,
    pub opt_welfare: f64,
    pub eq_profit: f64,
    pub eq_welfare: f64,
}

pub fn ratio_report(instance: &Instance) -> Result<RatioReport> {
    let d = instance.total_drivers();
    let eq = instance.equilibrium()?;
    let eq_profit = objective_value(instance, &eq.allocation.x, Objective::Profit);
    let eq_welfare = objective_value(instance, &eq.allocation.x, Objective::Welfare);
    if !(eq_profit > 0.0 && eq_welfare > 0.0) {
        return Err(Error::UndefinedRatio);
    }
    let x_p = optimize_allocation(instance, Objective::Profit, d, None, None)?;
    let x_r = optimize_allocation(instance, Objective::Welfare, d, None, None)?;
    let opt_profit = objective_value(instance, &x_p.x, Objective::Profit);
    let opt_welfare = objective_value(instance, &x_r.x, Objective::Welfare);
    let (p_max, p_min) = instance.profit_extremes()?;
    let spread = if p_min > 0.0 { p_max / p_min } else { f64::INFINITY };
    Ok(RatioReport {
        profit_ratio: opt_profit / eq_profit,
        welfare_ratio: opt_welfare / eq_welfare,
        p_max_over_p_min: spread,
        bound_profit: PROFIT_BOUND,
        bound_welfare: 1.0 + spread,
        eq_per_driver_profit: eq.pi_eq,
        opt_profit,
        opt_welfare,
        eq_profit,
        eq_welfare,
    })
}

/// Why a report breaks a proven bound, if it does.
pub fn check_report(r: &RatioReport) -> Option<String> {
    let mut reasons = Vec::new();
    if !(r.profit_ratio <= r.bound_profit + BOUND_SLACK) {
        reasons.push(format!("profit ratio {} exceeds {}", r.profit_ratio, r.bound_profit));
    }
    if !(r.welfare_ratio <= r.bound_welfare + BOUND_SLACK) {
        reasons.push(format!("welfare ratio {} exceeds {}", r.welfare_ratio, r.bound_welfare));
    }
    if !(r.profit_ratio >= 1.0 - 1e-9 && r.welfare_ratio >= 1.0 - 1e-9) {
        reasons.push(format!(
            "ratio below one (profit {}, welfare {})",
            r.profit_ratio, r.welfare_ratio
        ));
    }
    (!reasons.is_empty()).then(|| reasons.join("; "))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub index: usize,
    pub reason: String,
    /// The offending instance in file format.
    pub instance: String,
}

/// Check every instance; violations come back ordered by index.
pub fn certify_bounds(instances: &[Instance]) -> Vec<Violation> {
    certify_with(instances, ratio_report)
}

/// As [`certify_bounds`] with a caller-supplied report function.
pub fn certify_with<F>(instances: &[Instance], report: F) -> Vec<Violation>
where
    F: Fn(&Instance) -> Result<RatioReport> + Sync,
{
    instances
        .par_iter()
        .enumerate()
        .filter_map(|(index, inst)| {
            let reason = match report(inst) {
                Ok(r) => check_report(&r)?,
                Err(e) => e.to_string(),
            };
            Some(Violation {
                index,
                reason,
                instance: serialize_instance(inst),
            })
        })
        .collect()
}

/// Two zero-advantage routes with `k̃* = (eps, 1−eps)`, `D = 1`, per-rider
/// profits `(ratio, 1)`, and `p1Λ1 = p2Λ2/k̃2*` so that everyone crowds route 1.
///
/// The welfare ratio is `1 + (1−eps)·ratio`; with `ratio = 1` the profit
/// ratio is `2 − eps`.
pub fn tight_welfare_instance(eps: f64, ratio: f64) -> Result<Instance> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidConfig(format!("eps must lie in (0, 1), got {eps}")));
    }
    if !(ratio >= 1.0 && ratio.is_finite()) {
        return Err(Error::InvalidConfig(format!("p_max/p_min must be at least 1, got {ratio}")));
    }
    let config = InstanceConfig {
        capacity: 4.0,
        t1: 0.0,
        t2: 420.0,
        total_drivers: 1.0,
        eta_e: 0.61,
        eta_l: 2.4,
        eta_t: 2.5,
        money_per_minute: 2.5,
    };
    let per_minute = config.capacity * config.window() / 2.0;
    let l2 = 10.0;
    let l1 = l2 * eps * ratio;
    let route = |id: &str, p: f64, l: f64, k: f64| RouteParams {
        id: id.into(),
        fare: p,
        travel_time: l,
        trip_cost: 0.0,
        total_demand: k * per_minute / l,
        outside: OutsideOption::Direct(0.0),
    };
    Instance::new(
        config,
        vec![route("r1", ratio, l1, eps), route("r2", 1.0, l2, 1.0 - eps)],
    )
}

/// Profit ratio `2 − eps`.
pub fn tight_profit_instance(eps: f64) -> Result<Instance> {
    tight_welfare_instance(eps, 1.0)
}

/// The profit construction, on which lowest-profit-first with share `alpha`
/// attains `(k̃2* + 1)/(min(alpha, k̃2*) + 1)`.
pub fn lpf_lower_bound_instance(alpha: f64, eps: f64) -> Result<Instance> {
    if !(0.0..1.0).contains(&alpha) {
        return Err(Error::InvalidAlpha(alpha));
    }
    tight_profit_instance(eps)
}

/// Closed-form ratio of [`lpf_lower_bound_instance`].
pub fn lpf_lower_bound_ratio(alpha: f64, eps: f64) -> f64 {
    let k2 = 1.0 - eps;
    (k2 + 1.0) / (alpha.min(k2) + 1.0)
}
