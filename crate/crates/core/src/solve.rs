//! Level search shared by the equilibrium and allocation solvers.
//!
//! Both problems reduce to: find a level `v` such that a family of
//! non-increasing per-route responses `x_i(v)` sums to a target mass. Each
//! response is continuous except at finitely many levels where a route is
//! indifferent over a whole interval; those are listed as [`Flat`]s and mass
//! on them is split by a fixed fill order.

use crate::error::{Error, Result};

pub(crate) const MAX_BISECTION: usize = 200;
const MAX_BRACKET: usize = 1100;
const LEVEL_TIE: f64 = 1e-12;
const MASS_TOL: f64 = 1e-10;

/// At `level`, route `route` accepts any mass in `[lo, hi]`.
///
/// Invariant: `point(route, level) == lo` and `point(route, v) >= hi` for `v < level`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Flat {
    pub level: f64,
    pub route: usize,
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Clone)]
pub(crate) struct LevelSolution {
    pub level: f64,
    pub x: Vec<f64>,
    pub iterations: usize,
}

pub(crate) struct LevelProblem<'a, P> {
    pub target: f64,
    /// Non-increasing response of each route to the level.
    pub point: P,
    pub flats: Vec<Flat>,
    /// Routes in the order they absorb mass on a tied flat level.
    pub fill_order: &'a [usize],
    /// Responses diverge or a flat of unbounded width sits at this level.
    pub floor_level: f64,
    /// Total response here is at most the target.
    pub top_level: f64,
    /// Residual corrections never push a route below this.
    pub lower: &'a [f64],
}

impl<P: Fn(usize, f64) -> f64> LevelProblem<'_, P> {
    fn n(&self) -> usize {
        self.lower.len()
    }

    fn respond(&self, v: f64) -> Vec<f64> {
        (0..self.n()).map(|i| (self.point)(i, v)).collect()
    }

    fn total(&self, v: f64) -> f64 {
        (0..self.n()).map(|i| (self.point)(i, v)).sum()
    }

    fn close(&self, s: f64) -> bool {
        (s - self.target).abs() <= MASS_TOL * self.target.abs().max(1e-300)
    }

    /// Spread the rounding residual over routes strictly above their lower bound.
    fn settle(&self, x: &mut [f64]) -> Result<()> {
        let r = self.target - x.iter().sum::<f64>();
        if r == 0.0 {
            return Ok(());
        }
        let free: f64 = x.iter().zip(self.lower).map(|(a, b)| (a - b).max(0.0)).sum();
        if free > 0.0 && r.abs() <= 1e-6 * self.target.abs().max(free) {
            for (a, b) in x.iter_mut().zip(self.lower) {
                let share = (*a - b).max(0.0) / free;
                *a += r * share;
            }
            Ok(())
        } else if self.close(x.iter().sum()) {
            Ok(())
        } else {
            Err(Error::NonConvergence(MAX_BISECTION))
        }
    }

    fn try_flat(&self, group: &[Flat]) -> Option<Vec<f64>> {
        let level = group[0].level;
        let mut x = self.respond(level);
        let mut room = vec![0.0; self.n()];
        for f in group {
            x[f.route] = f.lo;
            room[f.route] += f.hi - f.lo;
        }
        let lo: f64 = x.iter().sum();
        let hi = lo + room.iter().sum::<f64>();
        let slack = MASS_TOL * self.target.abs().max(1.0);
        if lo > self.target + slack || hi < self.target - slack {
            return None;
        }
        let mut extra = self.target - lo;
        for &i in self.fill_order {
            if extra <= 0.0 {
                break;
            }
            let take = extra.min(room[i]);
            x[i] += take;
            extra -= take;
        }
        Some(x)
    }

    pub fn solve(&self) -> Result<LevelSolution> {
        let top = self.top_level;
        if self.target <= 0.0 || self.total(top) >= self.target * (1.0 - LEVEL_TIE) {
            let mut x = self.respond(top);
            if self.target > 0.0 {
                self.settle(&mut x)?;
            }
            return Ok(LevelSolution {
                level: top,
                x,
                iterations: 0,
            });
        }

        let mut flats = self.flats.clone();
        flats.sort_by(|a, b| b.level.total_cmp(&a.level));
        let mut start = 0;
        while start < flats.len() {
            let head = flats[start].level;
            let mut end = start + 1;
            while end < flats.len() && head - flats[end].level <= LEVEL_TIE * head.abs() {
                end += 1;
            }
            if let Some(mut x) = self.try_flat(&flats[start..end]) {
                self.settle(&mut x)?;
                return Ok(LevelSolution {
                    level: head,
                    x,
                    iterations: 0,
                });
            }
            start = end;
        }

        let floor = self.floor_level;
        let mut lo = floor + 0.5 * (top - floor);
        let mut steps = 0;
        while self.total(lo) < self.target {
            lo = floor + 0.5 * (lo - floor);
            steps += 1;
            if steps > MAX_BRACKET || lo <= floor {
                return Err(Error::NonConvergence(steps));
            }
        }
        let mut hi = top;

        let mut iterations = 0;
        while iterations < MAX_BISECTION {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            iterations += 1;
            let s = self.total(mid);
            if s >= self.target {
                lo = mid;
            } else {
                hi = mid;
            }
            if (s - self.target).abs() <= 1e-15 * self.target {
                lo = mid;
                break;
            }
        }
        let mut x = self.respond(lo);
        self.settle(&mut x)?;
        Ok(LevelSolution {
            level: lo,
            x,
            iterations,
        })
    }
}
