mod common;

use common::{instance, seeded};
use proptest::prelude::*;
use transit_core::sample::AdvantageMode;
use transit_core::{objective_value, optimize_allocation, Instance, Objective};

/// KKT residual of `x` for maximizing the objective under `Σx = budget`, `x ≥ 0`.
fn kkt_violation(inst: &Instance, obj: Objective, x: &[f64]) -> f64 {
    let w = obj.weights(inst);
    let der = inst.derived();
    // derivatives are taken at min(x, k̃*) so that rounding past a kink is not a violation
    let left: Vec<f64> = (0..x.len())
        .map(|i| der[i].marginal_value(w[i], x[i].min(der[i].k_tilde_star)))
        .collect();
    let right: Vec<f64> = (0..x.len())
        .map(|i| if x[i] < der[i].k_tilde_star * (1.0 - 1e-12) { left[i] } else { 0.0 })
        .collect();
    let scale = left.iter().chain(&right).cloned().fold(1e-300, f64::max);
    // no unit of mass can move from a route with x_i > 0 to one that pays more at the margin
    let mut worst: f64 = 0.0;
    for i in (0..x.len()).filter(|&i| x[i] > 0.0) {
        for j in 0..x.len() {
            worst = worst.max((right[j] - left[i]) / scale);
        }
    }
    worst
}

/// Best point of a simplex grid with `cells` steps per unit of `D`, then of
/// finer grids around the incumbent; `~10^6` evaluations in all.
fn grid_max(inst: &Instance, obj: Objective, cells: usize) -> f64 {
    let d = inst.total_drivers();
    let mut h = d / cells as f64;
    let mut best = (f64::NEG_INFINITY, [0.0; 3]);
    for a in 0..=cells {
        for b in 0..=cells - a {
            for c in 0..=cells - a - b {
                let y = [a as f64 * h, b as f64 * h, c as f64 * h];
                let v = objective_value(inst, &[y[0], y[1], y[2], d - y[0] - y[1] - y[2]], obj);
                if v > best.0 {
                    best = (v, y);
                }
            }
        }
    }
    for _ in 0..4 {
        let centre = best.1;
        let fine = h / 10.0;
        for a in -20..=20 {
            for b in -20..=20 {
                for c in -20..=20 {
                    let y = [
                        centre[0] + a as f64 * fine,
                        centre[1] + b as f64 * fine,
                        centre[2] + c as f64 * fine,
                    ];
                    let last = d - y[0] - y[1] - y[2];
                    if y.iter().any(|v| *v < 0.0) || last < 0.0 {
                        continue;
                    }
                    let v = objective_value(inst, &[y[0], y[1], y[2], last], obj);
                    if v > best.0 {
                        best = (v, y);
                    }
                }
            }
        }
        h = fine;
    }
    best.0
}

#[test]
fn four_route_optimum_matches_simplex_grid() {
    let cells = 120;
    for (seed, mode) in [(1, AdvantageMode::Positive), (2, AdvantageMode::Mixed), (3, AdvantageMode::Zero)] {
        let inst = seeded(seed, 4, 4, mode);
        for obj in [Objective::Profit, Objective::Welfare] {
            let x = optimize_allocation(&inst, obj, inst.total_drivers(), None, None).unwrap();
            let v = objective_value(&inst, &x.x, obj);
            let g = grid_max(&inst, obj, cells);
            assert!(v >= g * (1.0 - 1e-12), "{obj:?} seed {seed}: optimizer {v} below grid {g}");
            assert!((v - g) / v <= 1e-4, "{obj:?} seed {seed}: optimizer {v} grid {g}");
        }
    }
}

#[test]
fn tight_profit_instance_optimum_saturates_both_routes() {
    let inst = transit_core::analysis::tight_profit_instance(0.2).unwrap();
    let x = optimize_allocation(&inst, Objective::Profit, 1.0, None, None).unwrap();
    assert!((x.x[0] - 0.2).abs() <= 1e-12);
    assert!((x.x[1] - 0.8).abs() <= 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn optimum_satisfies_kkt(inst in instance(2..=6, AdvantageMode::Mixed), share in 0.1..2.5f64) {
        let budget = share * inst.saturation_mass();
        for obj in [Objective::Profit, Objective::Welfare] {
            let x = optimize_allocation(&inst, obj, budget, None, None).unwrap();
            prop_assert!((x.x.iter().sum::<f64>() - budget).abs() <= 1e-9 * budget);
            prop_assert!(kkt_violation(&inst, obj, &x.x) <= 1e-7);
        }
    }

    #[test]
    fn optimum_beats_equilibrium(inst in instance(2..=6, AdvantageMode::Mixed)) {
        let eq = inst.equilibrium().unwrap();
        for obj in [Objective::Profit, Objective::Welfare] {
            let x = optimize_allocation(&inst, obj, inst.total_drivers(), None, None).unwrap();
            let (v, e) = (objective_value(&inst, &x.x, obj), objective_value(&inst, &eq.allocation.x, obj));
            prop_assert!(v >= e * (1.0 - 1e-12));
        }
    }

    #[test]
    fn optimum_non_decreasing_in_budget(inst in instance(2..=6, AdvantageMode::Mixed)) {
        let sat = inst.saturation_mass();
        for obj in [Objective::Profit, Objective::Welfare] {
            let mut prev = 0.0;
            for k in 1..=30 {
                let b = sat * k as f64 / 20.0;
                let x = optimize_allocation(&inst, obj, b, None, None).unwrap();
                let v = objective_value(&inst, &x.x, obj);
                prop_assert!(v >= prev * (1.0 - 1e-12));
                prev = v;
            }
        }
    }

    #[test]
    fn box_constrained_optimum_respects_bounds(inst in instance(3..=5, AdvantageMode::Mixed), f in 0.0..0.3f64, c in 0.5..1.5f64) {
        let n = inst.len();
        let d = inst.total_drivers();
        let floor = vec![f * d / n as f64; n];
        let ceiling: Vec<f64> = inst.derived().iter().map(|r| (c * r.k_tilde_star).max(d)).collect();
        let x = optimize_allocation(&inst, Objective::Profit, d, Some(&floor), Some(&ceiling)).unwrap();
        for i in 0..n {
            prop_assert!(x.x[i] >= floor[i] - 1e-12 * d && x.x[i] <= ceiling[i] + 1e-12 * d);
        }
        prop_assert!((x.x.iter().sum::<f64>() - d).abs() <= 1e-9 * d);
    }
}
