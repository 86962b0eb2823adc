//! Budget-balanced route transfers that make a target allocation an equilibrium.
//!
//! Every route receives `τ_j = π̃ − π_j(x_j*)`, where `π̃` is the
//! `x*`-weighted mean of the target per-driver profits. Adjusted profits are
//! then equal on all routes and `Σ τ_j x_j* = 0`.

use crate::allocation::Allocation;
use crate::equilibrium::{is_equilibrium, wardrop_equilibrium, DriverGame};
use crate::error::{Error, Result};
use crate::model::Instance;

#[derive(Debug, Clone, PartialEq)]
pub struct TransferVector {
    /// Per-driver transfer; negative is a toll.
    pub tau: Vec<f64>,
    pub target: Allocation,
    /// Common adjusted per-driver profit.
    pub pi_tilde_eq: f64,
}

impl TransferVector {
    /// `Σ τ_i x_i*`.
    pub fn budget_residual(&self) -> f64 {
        self.tau.iter().zip(&self.target.x).map(|(t, x)| t * x).sum()
    }

    /// `Σ |τ_i| x_i*`, the gross flow of money through the scheme.
    pub fn budget_scale(&self) -> f64 {
        self.tau.iter().zip(&self.target.x).map(|(t, x)| t.abs() * x).sum()
    }
}

pub fn transfers_for_target(instance: &Instance, target: &Allocation) -> Result<TransferVector> {
    let profits: Vec<f64> = instance
        .derived()
        .iter()
        .zip(&target.x)
        .map(|(d, x)| d.per_driver_profit(*x))
        .collect();
    transfers_from_profits(&profits, target)
}

/// Transfers from target per-driver profits `π_i*` directly.
pub fn transfers_from_profits(profits: &[f64], target: &Allocation) -> Result<TransferVector> {
    if profits.len() != target.len() {
        return Err(Error::Dimension {
            expected: target.len(),
            got: profits.len(),
        });
    }
    let mass: f64 = target.x.iter().sum();
    if !(mass > 0.0) {
        return Err(Error::ZeroTarget);
    }
    let pi_tilde_eq = profits.iter().zip(&target.x).map(|(p, x)| p * x).sum::<f64>() / mass;
    Ok(TransferVector {
        tau: profits.iter().map(|p| pi_tilde_eq - p).collect(),
        target: target.clone(),
        pi_tilde_eq,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SchemeReport {
    pub budget_residual: f64,
    /// The target satisfies the equilibrium condition under adjusted profits.
    pub equilibrium_ok: bool,
    /// Largest gap between the canonical adjusted equilibrium and the target.
    pub canonical_deviation: f64,
    /// The canonical solver reproduces the target within `tol·D`.
    pub canonical_matches: bool,
    /// `π̃ ≥ W`, when a reservation wage was supplied.
    pub ir_wage_ok: Option<bool>,
}

pub fn verify_scheme(
    instance: &Instance,
    tv: &TransferVector,
    tol: f64,
    wage: Option<f64>,
) -> Result<SchemeReport> {
    let game: DriverGame = instance.driver_game().with_transfers(&tv.tau)?;
    let check = is_equilibrium(&game, &tv.target.x, None, tol);
    let mass: f64 = tv.target.x.iter().sum();
    let eq = wardrop_equilibrium(&game, mass, None, tol.max(1e-12))?;
    let canonical_deviation = eq
        .allocation
        .x
        .iter()
        .zip(&tv.target.x)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    Ok(SchemeReport {
        budget_residual: tv.budget_residual(),
        equilibrium_ok: check.ok,
        canonical_deviation,
        canonical_matches: canonical_deviation <= tol * mass,
        ir_wage_ok: wage.map(|w| tv.pi_tilde_eq >= w),
    })
}
