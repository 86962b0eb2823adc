//! Concave piecewise-quadratic served-demand curves.
//!
//! Every demand function in the model has the shape
//! `slope·x − curvature·x²` below a threshold and a constant plateau at and
//! beyond it. The true minibus demand, its linearization and the all-zero
//! curve of an inactive route are all instances, so the equilibrium and
//! allocation solvers only ever see a [`DemandCurve`].

/// `D(x) = slope·x − curvature·x²` on `[0, threshold)`, `plateau` on `[threshold, ∞)`.
///
/// Invariant: the two branches meet at `threshold` and the quadratic is
/// non-decreasing there, so `D` is continuous, concave and non-decreasing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DemandCurve {
    pub slope: f64,
    pub curvature: f64,
    pub threshold: f64,
    pub plateau: f64,
}

impl DemandCurve {
    pub const ZERO: DemandCurve = DemandCurve {
        slope: 0.0,
        curvature: 0.0,
        threshold: 0.0,
        plateau: 0.0,
    };

    pub fn value(&self, x: f64) -> f64 {
        if x < self.threshold {
            (self.slope - self.curvature * x) * x
        } else {
            self.plateau
        }
    }

    /// Derivative of `D`; the left derivative at the threshold itself.
    pub fn marginal(&self, x: f64) -> f64 {
        if x <= self.threshold && self.threshold > 0.0 {
            self.slope - 2.0 * self.curvature * x.min(self.threshold)
        } else {
            0.0
        }
    }

    /// `D(x)/x`, extended to `x = 0` by its right limit.
    pub fn per_driver(&self, x: f64) -> f64 {
        if self.plateau == 0.0 {
            0.0
        } else if x < self.threshold {
            self.slope - self.curvature * x
        } else {
            self.plateau / x
        }
    }

    pub fn is_zero(&self) -> bool {
        self.plateau == 0.0
    }

    /// Per-driver value at which the linear segment meets the hyperbolic tail.
    pub fn kink_level(&self) -> f64 {
        self.plateau / self.threshold
    }

    /// The per-driver curve is constant on `[0, threshold]`.
    pub fn is_flat(&self) -> bool {
        !self.is_zero() && self.curvature == 0.0
    }

    /// Largest `x` with `per_driver(x) >= level`, for `0 < level <= slope`.
    ///
    /// On a flat curve with `level == slope` this is the right end of the
    /// flat segment; callers that need the whole segment handle it apart.
    pub fn inverse_per_driver(&self, level: f64) -> f64 {
        if self.is_zero() || level > self.slope {
            return 0.0;
        }
        if level <= 0.0 {
            return f64::INFINITY;
        }
        if self.curvature > 0.0 && level >= self.kink_level() {
            ((self.slope - level) / self.curvature).clamp(0.0, self.threshold)
        } else if self.curvature == 0.0 && level >= self.slope {
            self.threshold
        } else {
            self.plateau / level
        }
    }
}
