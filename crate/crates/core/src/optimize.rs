//! Profit- and welfare-maximizing allocations.
//!
//! The objective `Σ w_i D_i(x_i)` is separable and concave, so the optimum is
//! found by bisection on the multiplier of the budget constraint: each route
//! takes the mass at which its marginal value equals the multiplier.

use crate::allocation::Allocation;
use crate::curve::DemandCurve;
use crate::equilibrium::RankOrder;
use crate::error::{Error, Result};
use crate::model::Instance;
use crate::solve::{Flat, LevelProblem};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Objective {
    /// Cumulative driver profit `Σ p_i Λ_i^M(x_i)`.
    Profit,
    /// Cumulative riders served `Σ Λ_i^M(x_i)`.
    Welfare,
}

impl Objective {
    pub fn weights(&self, instance: &Instance) -> Vec<f64> {
        match self {
            Objective::Profit => instance.margins(),
            Objective::Welfare => vec![1.0; instance.len()],
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Objective::Profit => "profit",
            Objective::Welfare => "welfare",
        }
    }
}

pub fn curves_value(curves: &[DemandCurve], weights: &[f64], x: &[f64]) -> f64 {
    curves
        .iter()
        .zip(weights)
        .zip(x)
        .map(|((c, w), xi)| w * c.value(*xi))
        .sum()
}

pub fn objective_value(instance: &Instance, x: &[f64], obj: Objective) -> f64 {
    curves_value(&instance.curves(), &obj.weights(instance), x)
}

/// Distribute `amount` over routes with `room`, proportionally to `weights`,
/// never exceeding any route's room.
pub(crate) fn spread(x: &mut [f64], room: &mut [f64], weights: &[f64], mut amount: f64) -> Result<()> {
    let n = x.len();
    for _ in 0..=n {
        if amount <= 0.0 {
            return Ok(());
        }
        let open: Vec<usize> = (0..n).filter(|&i| room[i] > 0.0).collect();
        if open.is_empty() {
            break;
        }
        let mut wsum: f64 = open.iter().map(|&i| weights[i]).sum();
        let uniform = wsum <= 0.0;
        if uniform {
            wsum = open.len() as f64;
        }
        let mut given = 0.0;
        for &i in &open {
            let w = if uniform { 1.0 } else { weights[i] };
            let take = (amount * w / wsum).min(room[i]);
            x[i] += take;
            room[i] -= take;
            given += take;
        }
        amount -= given;
        if given <= 0.0 {
            break;
        }
    }
    if amount <= 1e-12 * x.iter().sum::<f64>().max(1.0) {
        Ok(())
    } else {
        Err(Error::Infeasible(format!(
            "{amount} drivers exceed the ceilings"
        )))
    }
}

/// Maximize `Σ w_i D_i(x_i)` subject to `Σ x = budget` and `floor ≤ x ≤ ceiling`.
///
/// Mass beyond every route's threshold has zero marginal value and is
/// spread proportionally to the thresholds.
pub fn optimize_curves(
    curves: &[DemandCurve],
    weights: &[f64],
    budget: f64,
    floor: &[f64],
    ceiling: &[f64],
    fill_order: &[usize],
) -> Result<Vec<f64>> {
    let n = curves.len();
    for v in [weights.len(), floor.len(), ceiling.len()] {
        if v != n {
            return Err(Error::Dimension { expected: n, got: v });
        }
    }
    if floor.iter().zip(ceiling).any(|(f, c)| !(*f >= 0.0 && f <= c)) {
        return Err(Error::Infeasible("each floor must lie in [0, ceiling]".into()));
    }
    let floor_sum: f64 = floor.iter().sum();
    let ceil_sum: f64 = ceiling.iter().sum();
    let slack = 1e-12 * budget.abs().max(1.0);
    if !(budget >= floor_sum - slack && budget <= ceil_sum + slack) {
        return Err(Error::Infeasible(format!(
            "budget {budget} outside [{floor_sum}, {ceil_sum}]"
        )));
    }

    let upper: Vec<f64> = (0..n)
        .map(|i| floor[i].max(ceiling[i].min(curves[i].threshold)))
        .collect();
    let saturation: f64 = upper.iter().sum();
    if saturation <= budget {
        let mut x = upper;
        let mut room: Vec<f64> = (0..n).map(|i| ceiling[i] - x[i]).collect();
        let shares: Vec<f64> = curves.iter().map(|c| c.threshold).collect();
        spread(&mut x, &mut room, &shares, budget - saturation)?;
        return Ok(x);
    }

    let a: Vec<f64> = (0..n).map(|i| weights[i] * curves[i].slope).collect();
    let b: Vec<f64> = (0..n).map(|i| weights[i] * curves[i].curvature).collect();
    let mut flats = Vec::new();
    for i in 0..n {
        if upper[i] > floor[i] && b[i] == 0.0 {
            flats.push(Flat {
                level: a[i].max(0.0),
                route: i,
                lo: floor[i],
                hi: upper[i],
            });
        }
    }
    let response = |i: usize, mu: f64| -> f64 {
        if a[i] <= 0.0 || upper[i] <= floor[i] {
            floor[i]
        } else if b[i] > 0.0 {
            ((a[i] - mu) / (2.0 * b[i])).clamp(floor[i], upper[i])
        } else if mu >= a[i] {
            floor[i]
        } else {
            upper[i]
        }
    };
    let top = a.iter().cloned().fold(0.0, f64::max);
    let problem = LevelProblem {
        target: budget,
        point: response,
        flats,
        fill_order,
        floor_level: 0.0,
        top_level: top,
        lower: floor,
    };
    Ok(problem.solve()?.x)
}

/// Optimal allocation of `budget` drivers for `obj`; bounds default to `[0, ∞)`.
pub fn optimize_allocation(
    instance: &Instance,
    obj: Objective,
    budget: f64,
    floor: Option<&[f64]>,
    ceiling: Option<&[f64]>,
) -> Result<Allocation> {
    let n = instance.len();
    let zeros = vec![0.0; n];
    let inf = vec![f64::INFINITY; n];
    let x = optimize_curves(
        &instance.curves(),
        &obj.weights(instance),
        budget,
        floor.unwrap_or(&zeros),
        ceiling.unwrap_or(&inf),
        &RankOrder::canonical(instance).order,
    )?;
    Ok(Allocation { x, total: budget })
}
