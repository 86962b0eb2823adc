//! Allocation rules for a centrally controlled fraction `α` of the fleet.
//!
//! The controlled drivers `y` are placed first; the remaining `(1−α)D`
//! drivers then settle into the canonical equilibrium induced by `y`, and the
//! outcome is scored on the combined allocation.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::allocation::Allocation;
use crate::equilibrium::{wardrop_equilibrium, DriverGame, DEFAULT_TOL_EQ};
use crate::error::{Error, Result};
use crate::model::Instance;
use crate::optimize::{curves_value, objective_value, optimize_allocation, optimize_curves, spread, Objective};

/// Largest instance the brute-force oracle accepts.
pub const BRUTE_MAX_ROUTES: usize = 4;
/// Default number of grid cells along each axis of the brute-force simplex.
pub const BRUTE_DEFAULT_CELLS: f64 = 200.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algorithm {
    /// Lowest profit first.
    Lpf,
    /// Linearized non-compliant first.
    Lncf,
    /// Optimize the controlled drivers alone, ignoring the response.
    Greedy,
    /// Grid search over controlled allocations.
    Brute,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [
        Algorithm::Lpf,
        Algorithm::Lncf,
        Algorithm::Greedy,
        Algorithm::Brute,
    ];

    pub fn tag(&self) -> &'static str {
        match self {
            Algorithm::Lpf => "lpf",
            Algorithm::Lncf => "lncf",
            Algorithm::Greedy => "greedy",
            Algorithm::Brute => "brute",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Algorithm::ALL
            .iter()
            .find(|a| a.tag() == s)
            .copied()
            .ok_or_else(|| format!("unknown algorithm `{s}` (expected lpf, lncf, greedy or brute)"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StackelbergOutcome {
    pub y: Allocation,
    pub x_response: Allocation,
    pub combined: Allocation,
    pub objective_value: f64,
    pub alpha: f64,
}

fn check_alpha(alpha: f64) -> Result<()> {
    if (0.0..=1.0).contains(&alpha) {
        Ok(())
    } else {
        Err(Error::InvalidAlpha(alpha))
    }
}

/// Score `y` by letting the free drivers equilibrate around it.
pub fn induced_outcome(
    instance: &Instance,
    alpha: f64,
    y: Vec<f64>,
    obj: Objective,
) -> Result<StackelbergOutcome> {
    let d = instance.total_drivers();
    let free = (1.0 - alpha) * d;
    let eq = wardrop_equilibrium(&instance.driver_game(), free, Some(&y), DEFAULT_TOL_EQ)?;
    let objective_value = objective_value(instance, &eq.allocation.x, obj);
    Ok(StackelbergOutcome {
        y: Allocation {
            total: alpha * d,
            x: y,
        },
        x_response: Allocation {
            x: eq.free,
            total: free,
        },
        combined: eq.allocation,
        objective_value,
        alpha,
    })
}

fn induced_value(game: &DriverGame, weights: &[f64], free: f64, y: &[f64]) -> Result<f64> {
    let eq = wardrop_equilibrium(game, free, Some(y), DEFAULT_TOL_EQ)?;
    Ok(curves_value(&game.curves, weights, &eq.allocation.x))
}

/// Sort `idx` by `key` ascending, treating keys within `1e-12` relative as
/// tied and ordering tied runs by `tie`.
fn sort_with_ties(idx: &mut [usize], key: &[f64], tie: impl Fn(&usize, &usize) -> Ordering) {
    idx.sort_by(|a, b| key[*a].total_cmp(&key[*b]).then_with(|| tie(a, b)));
    let mut start = 0;
    while start < idx.len() {
        let head = key[idx[start]];
        let mut end = start + 1;
        while end < idx.len() && key[idx[end]] - head <= 1e-12 * head.abs() {
            end += 1;
        }
        idx[start..end].sort_by(&tie);
        start = end;
    }
}

/// Fill the optimum's least profitable routes with controlled drivers, each up
/// to its optimal mass.
pub fn lpf(instance: &Instance, alpha: f64, obj: Objective) -> Result<StackelbergOutcome> {
    check_alpha(alpha)?;
    let d = instance.total_drivers();
    let opt = optimize_allocation(instance, obj, d, None, None)?;
    let der = instance.derived();
    let profits: Vec<f64> = der
        .iter()
        .zip(&opt.x)
        .map(|(r, x)| r.per_driver_profit(*x))
        .collect();
    let mut order: Vec<usize> = (0..instance.len()).collect();
    let ids = |a: &usize, b: &usize| instance.routes[*a].id.cmp(&instance.routes[*b].id).then(a.cmp(b));
    match obj {
        Objective::Welfare => sort_with_ties(&mut order, &profits, |a, b| {
            der[*b].zeta_tilde.total_cmp(&der[*a].zeta_tilde).then_with(|| ids(a, b))
        }),
        Objective::Profit => sort_with_ties(&mut order, &profits, ids),
    }
    let mut y = vec![0.0; instance.len()];
    let mut left = alpha * d;
    for &i in &order {
        let take = left.min(opt.x[i]);
        y[i] = take;
        left -= take;
    }
    if left > 0.0 {
        // rounding only: the optimum sums to D ≥ αD
        if let Some(&last) = order.iter().rev().find(|&&i| opt.x[i] > 0.0) {
            y[last] += left;
        }
    }
    induced_outcome(instance, alpha, y, obj)
}

/// Plan against linearized demand assuming the free drivers play the
/// linearized equilibrium, then fill the linear segments they leave open.
pub fn lncf(instance: &Instance, alpha: f64, obj: Objective) -> Result<StackelbergOutcome> {
    check_alpha(alpha)?;
    let n = instance.len();
    let d = instance.total_drivers();
    let budget = alpha * d;
    let lin = instance.linearized_game();
    let x0 = wardrop_equilibrium(&lin, (1.0 - alpha) * d, None, DEFAULT_TOL_EQ)?.allocation.x;
    let der = instance.derived();
    let ceiling: Vec<f64> = (0..n)
        .map(|i| if der[i].active { (der[i].k_star - x0[i]).max(0.0) } else { 0.0 })
        .collect();
    let room: f64 = ceiling.iter().sum();
    let planned = budget.min(room);
    let mut y = optimize_curves(
        &instance.linearized_curves(),
        &obj.weights(instance),
        planned,
        &vec![0.0; n],
        &ceiling,
        &lin.rank.order,
    )?;
    if budget > planned {
        // every linear segment is full: the rest is placed like surplus drivers
        let shares: Vec<f64> = der.iter().map(|r| if r.active { r.k_star } else { 0.0 }).collect();
        let mut open = vec![f64::INFINITY; n];
        spread(&mut y, &mut open, &shares, budget - planned)?;
    }
    induced_outcome(instance, alpha, y, obj)
}

/// Optimize the controlled drivers as if they were alone.
pub fn greedy(instance: &Instance, alpha: f64, obj: Objective) -> Result<StackelbergOutcome> {
    check_alpha(alpha)?;
    let y = optimize_allocation(instance, obj, alpha * instance.total_drivers(), None, None)?;
    induced_outcome(instance, alpha, y.x, obj)
}

/// Visit every composition of `cells` into `parts` parts with first part fixed, in lexicographic order.
fn compositions(parts: usize, cells: usize, visit: &mut impl FnMut(&[usize])) {
    fn rec(k: &mut Vec<usize>, pos: usize, left: usize, visit: &mut impl FnMut(&[usize])) {
        if pos + 1 == k.len() {
            k[pos] = left;
            visit(k);
            return;
        }
        for c in 0..=left {
            k[pos] = c;
            rec(k, pos + 1, left - c, visit);
        }
    }
    let mut k = vec![0; parts];
    rec(&mut k, 0, cells, visit);
}

/// Best canonical-equilibrium objective over controlled allocations on a
/// simplex grid with spacing close to `grid_step` (default `αD/200`).
/// Best grid point so far and its objective value.
type Best = Option<(f64, Vec<usize>)>;

pub fn brute_force_stackelberg(
    instance: &Instance,
    alpha: f64,
    obj: Objective,
    grid_step: Option<f64>,
) -> Result<StackelbergOutcome> {
    check_alpha(alpha)?;
    let n = instance.len();
    if n > BRUTE_MAX_ROUTES {
        return Err(Error::DimensionTooLarge(n));
    }
    let budget = alpha * instance.total_drivers();
    let cells = if budget > 0.0 {
        let step = grid_step.unwrap_or(budget / BRUTE_DEFAULT_CELLS);
        if !(step > 0.0) {
            return Err(Error::Infeasible("grid_step must be positive".into()));
        }
        ((budget / step).round() as usize).max(1)
    } else {
        0
    };
    let h = if cells > 0 { budget / cells as f64 } else { 0.0 };
    let to_y = |k: &[usize]| -> Vec<f64> { k.iter().map(|&c| c as f64 * h).collect() };
    let game = instance.driver_game();
    let weights = obj.weights(instance);
    let free = (1.0 - alpha) * instance.total_drivers();

    let per_head: Vec<Result<Best>> = (0..=cells)
        .into_par_iter()
        .map(|head| {
            let mut best: Best = None;
            let mut err = None;
            let mut visit = |rest: &[usize]| {
                if err.is_some() {
                    return;
                }
                let mut k = Vec::with_capacity(n);
                k.push(head);
                k.extend_from_slice(rest);
                match induced_value(&game, &weights, free, &to_y(&k)) {
                    Ok(v) => {
                        if best.as_ref().is_none_or(|(b, _)| v > *b) {
                            best = Some((v, k));
                        }
                    }
                    Err(e) => err = Some(e),
                }
            };
            if n == 1 {
                if head == cells {
                    visit(&[]);
                }
            } else {
                compositions(n - 1, cells - head, &mut visit);
            }
            match err {
                Some(e) => Err(e),
                None => Ok(best),
            }
        })
        .collect();

    let mut best: Best = None;
    for r in per_head {
        if let Some((v, k)) = r? {
            if best.as_ref().is_none_or(|(b, _)| v > *b) {
                best = Some((v, k));
            }
        }
    }
    let (_, k) = best.ok_or_else(|| Error::Infeasible("empty grid".into()))?;
    induced_outcome(instance, alpha, to_y(&k), obj)
}

/// Dispatch by tag; `grid_step` only affects the brute-force oracle.
pub fn run(
    algo: Algorithm,
    instance: &Instance,
    alpha: f64,
    obj: Objective,
    grid_step: Option<f64>,
) -> Result<StackelbergOutcome> {
    match algo {
        Algorithm::Lpf => lpf(instance, alpha, obj),
        Algorithm::Lncf => lncf(instance, alpha, obj),
        Algorithm::Greedy => greedy(instance, alpha, obj),
        Algorithm::Brute => brute_force_stackelberg(instance, alpha, obj, grid_step),
    }
}
