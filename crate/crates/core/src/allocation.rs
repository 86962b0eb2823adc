use crate::error::{Error, Result};

/// Non-negative driver masses, one per route, with their declared total.
#[derive(Debug, Clone, PartialEq)]
pub struct Allocation {
    pub x: Vec<f64>,
    pub total: f64,
}

impl Allocation {
    /// Total is taken as the entry sum.
    pub fn new(x: Vec<f64>) -> Result<Self> {
        if let Some(bad) = x.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::Infeasible(format!("allocation entry {bad} is not a finite non-negative mass")));
        }
        let total = x.iter().sum();
        Ok(Allocation { x, total })
    }

    pub fn zeros(n: usize) -> Self {
        Allocation {
            x: vec![0.0; n],
            total: 0.0,
        }
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// Entrywise sum; both must have the same length.
    pub fn plus(&self, other: &Allocation) -> Allocation {
        let x: Vec<f64> = self.x.iter().zip(&other.x).map(|(a, b)| a + b).collect();
        Allocation {
            total: self.total + other.total,
            x,
        }
    }

    /// Entries non-negative and summing to `total` within `1e-9·total`.
    pub fn is_feasible(&self) -> bool {
        let sum: f64 = self.x.iter().sum();
        self.x.iter().all(|v| *v >= 0.0) && (sum - self.total).abs() <= 1e-9 * self.total.max(1e-300)
    }
}
