//! Instances, derived per-route coefficients and the closed-form rider model.

use crate::curve::DemandCurve;
use crate::error::{Error, Result};

/// Global primitives of an instance.
#[derive(Debug, Clone, PartialEq)]
pub struct InstanceConfig {
    /// Riders per trip (F).
    pub capacity: f64,
    /// Peak window start, minutes.
    pub t1: f64,
    /// Peak window end, minutes.
    pub t2: f64,
    /// Driver mass (D).
    pub total_drivers: f64,
    /// Early-arrival penalty relative to waiting (η_E).
    pub eta_e: f64,
    /// Late-arrival penalty relative to waiting (η_L).
    pub eta_l: f64,
    /// Money per in-vehicle minute (η_T).
    pub eta_t: f64,
    /// Money per waiting-minute; converts fares into waiting-time units.
    pub money_per_minute: f64,
}

impl InstanceConfig {
    pub fn window(&self) -> f64 {
        self.t2 - self.t1
    }

    /// `(η_E + η_L) / (η_E η_L)`.
    pub fn schedule_factor(&self) -> f64 {
        (self.eta_e + self.eta_l) / (self.eta_e * self.eta_l)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        let all = [
            self.capacity,
            self.t1,
            self.t2,
            self.total_drivers,
            self.eta_e,
            self.eta_l,
            self.eta_t,
            self.money_per_minute,
        ];
        if all.iter().any(|v| !v.is_finite()) {
            return bad("all parameters must be finite");
        }
        if self.capacity <= 0.0 {
            return bad("F must be positive");
        }
        if self.t2 <= self.t1 {
            return bad("t2 must exceed t1");
        }
        if self.total_drivers <= 0.0 {
            return bad("D must be positive");
        }
        if !(self.eta_e > 0.0 && self.eta_e < 1.0) {
            return bad("eta_E must lie in (0, 1)");
        }
        if self.eta_l <= 0.0 {
            return bad("eta_L must be positive");
        }
        if self.eta_t < 0.0 {
            return bad("eta_T must be non-negative");
        }
        if self.money_per_minute <= 0.0 {
            return bad("money_per_minute must be positive");
        }
        Ok(())
    }
}

/// How a route's cost advantage `S` over the outside option is specified.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OutsideOption {
    /// Outside-option cost in waiting-minutes; `S` is derived from it.
    Cost(f64),
    /// `S` in waiting-minutes, given directly.
    Direct(f64),
}

/// Per-route primitives.
#[derive(Debug, Clone, PartialEq)]
pub struct RouteParams {
    pub id: String,
    pub fare: f64,
    /// One-way travel time, minutes.
    pub travel_time: f64,
    /// Operating cost per trip, money.
    pub trip_cost: f64,
    /// Rider mass wishing to travel during the window (Λ).
    pub total_demand: f64,
    pub outside: OutsideOption,
}

impl RouteParams {
    fn invalid(&self, reason: &str) -> Error {
        Error::InvalidRoute {
            id: self.id.clone(),
            reason: reason.to_string(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let outside = match self.outside {
            OutsideOption::Cost(c) | OutsideOption::Direct(c) => c,
        };
        if ![self.fare, self.travel_time, self.trip_cost, self.total_demand, outside]
            .iter()
            .all(|v| v.is_finite())
        {
            return Err(self.invalid("all parameters must be finite"));
        }
        if self.fare <= 0.0 {
            return Err(self.invalid("fare must be positive"));
        }
        if self.travel_time <= 0.0 {
            return Err(self.invalid("travel_time must be positive"));
        }
        if self.trip_cost < 0.0 {
            return Err(self.invalid("trip_cost must be non-negative"));
        }
        if self.total_demand <= 0.0 {
            return Err(self.invalid("Lambda must be positive"));
        }
        Ok(())
    }
}

/// Coefficients of one route under a given configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct DerivedRoute {
    /// Per-rider profit `fare − trip_cost/F`.
    pub p: f64,
    /// Cost advantage over the outside option, waiting-minutes.
    pub s: f64,
    /// Desired arrival rate `Λ/Δ`.
    pub lambda_rate: f64,
    pub total_demand: f64,
    /// Driver mass at which service rate equals arrival rate.
    pub k_star: f64,
    /// Smallest driver mass serving all demand.
    pub k_tilde_star: f64,
    pub zeta1: f64,
    pub zeta2: f64,
    /// Riders per driver on the linear segment when `S = 0`.
    pub zeta_tilde: f64,
    pub gamma: f64,
    pub active: bool,
    /// Service rate per unit driver mass, `F/(2l)`.
    pub rate_per_driver: f64,
    pub window: f64,
    pub eta_e: f64,
    pub eta_l: f64,
}

/// Who arrives when under queuing, for one route and supply.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScheduleReport {
    pub n_early: f64,
    pub n_late: f64,
    pub len_early: f64,
    pub len_late: f64,
    pub len_ontime: f64,
}

impl ScheduleReport {
    /// First departure to last departure; equals the service time.
    pub fn total_length(&self) -> f64 {
        self.len_early + self.len_ontime + self.len_late
    }
}

/// Resolve `S` for a route: the outside cost minus the minibus fixed cost,
/// both in waiting-minutes.
pub fn cost_advantage(route: &RouteParams, cfg: &InstanceConfig) -> f64 {
    match route.outside {
        OutsideOption::Direct(s) => s,
        OutsideOption::Cost(c_out) => {
            c_out - (route.fare + cfg.eta_t * route.travel_time) / cfg.money_per_minute
        }
    }
}

pub fn derive_route(route: &RouteParams, cfg: &InstanceConfig) -> Result<DerivedRoute> {
    route.validate()?;
    let p = route.fare - route.trip_cost / cfg.capacity;
    if p < 0.0 {
        return Err(Error::NegativeProfit {
            id: route.id.clone(),
            p,
        });
    }
    let s = cost_advantage(route, cfg);
    let delta = cfg.window();
    let lam = route.total_demand;
    let rate = cfg.capacity / (2.0 * route.travel_time);
    let k_star = lam / (delta * rate);
    let base = DerivedRoute {
        p,
        s,
        lambda_rate: lam / delta,
        total_demand: lam,
        k_star,
        k_tilde_star: 0.0,
        zeta1: 0.0,
        zeta2: 0.0,
        zeta_tilde: 0.0,
        gamma: 0.0,
        active: false,
        rate_per_driver: rate,
        window: delta,
        eta_e: cfg.eta_e,
        eta_l: cfg.eta_l,
    };
    if s < 0.0 {
        return Ok(base);
    }
    let sg = s * cfg.schedule_factor();
    let k_tilde_star = if s > 0.0 {
        k_star.min(lam / (rate * sg))
    } else {
        k_star
    };
    Ok(DerivedRoute {
        k_tilde_star,
        zeta1: rate * (delta + sg),
        zeta2: rate * rate * sg * delta / lam,
        zeta_tilde: lam / k_star,
        gamma: sg / delta,
        active: true,
        ..base
    })
}

impl DerivedRoute {
    /// Service rate `μ(x) = xF/(2l)`, riders per minute.
    pub fn service_rate(&self, x: f64) -> f64 {
        x * self.rate_per_driver
    }

    /// Served rider mass; zero on inactive routes.
    pub fn curve(&self) -> DemandCurve {
        if !self.active {
            return DemandCurve::ZERO;
        }
        DemandCurve {
            slope: self.zeta1,
            curvature: self.zeta2,
            threshold: self.k_tilde_star,
            plateau: self.total_demand,
        }
    }

    /// `Λ·min(x/k*, 1)`; anchored at `k*`, not `k̃*`.
    pub fn linearized_curve(&self) -> DemandCurve {
        if !self.active {
            return DemandCurve::ZERO;
        }
        DemandCurve {
            slope: self.zeta_tilde,
            curvature: 0.0,
            threshold: self.k_star,
            plateau: self.total_demand,
        }
    }

    pub fn minibus_demand(&self, x: f64) -> f64 {
        self.curve().value(x)
    }

    pub fn linearized_demand(&self, x: f64) -> f64 {
        self.linearized_curve().value(x)
    }

    /// `p·Λ^M(x)/x`, with the right limit `p·ζ1` at zero.
    pub fn per_driver_profit(&self, x: f64) -> f64 {
        self.p * self.curve().per_driver(x)
    }

    /// `S̄(x) = Λ/(μ(x)·g)`: the advantage beyond which queues absorb all of it.
    pub fn queue_threshold(&self, x: f64) -> f64 {
        let g = (self.eta_e + self.eta_l) / (self.eta_e * self.eta_l);
        self.total_demand / (self.service_rate(x) * g)
    }

    /// Time from first to last departure, minutes.
    pub fn service_time(&self, x: f64) -> Result<f64> {
        if !self.active {
            return Err(Error::InactiveRoute);
        }
        if !(x > 0.0) {
            return Err(Error::NonPositiveMass(x));
        }
        let mu = self.service_rate(x);
        if mu >= self.lambda_rate {
            return Ok(self.window);
        }
        let s_bar = self.queue_threshold(x);
        if self.s >= s_bar {
            return Ok(self.total_demand / mu);
        }
        let g = (self.eta_e + self.eta_l) / (self.eta_e * self.eta_l);
        Ok(self.window + self.s * g * (1.0 - mu / self.lambda_rate))
    }

    pub fn rider_schedule(&self, x: f64) -> Result<ScheduleReport> {
        if !self.active {
            return Err(Error::InactiveRoute);
        }
        if !(x > 0.0) {
            return Err(Error::NonPositiveMass(x));
        }
        let mu = self.service_rate(x);
        if mu >= self.lambda_rate {
            return Err(Error::RegimeViolation("service rate meets arrival rate"));
        }
        let s_bar = self.queue_threshold(x);
        if self.s >= s_bar {
            return Err(Error::RegimeViolation("advantage exceeds queue threshold"));
        }
        Ok(ScheduleReport {
            n_early: mu * self.s / self.eta_e,
            n_late: mu * self.s / self.eta_l,
            len_early: self.s / self.eta_e,
            len_late: self.s / self.eta_l,
            len_ontime: (1.0 - self.s / s_bar) * self.window,
        })
    }

    /// Derivative of `w·Λ^M` at `x`; left derivative at `k̃*`, zero beyond.
    pub fn marginal_value(&self, w: f64, x: f64) -> f64 {
        w * self.curve().marginal(x)
    }
}

/// Largest `γ_i` over active routes.
pub fn instance_gamma(routes: &[DerivedRoute]) -> Result<f64> {
    routes
        .iter()
        .filter(|r| r.active)
        .map(|r| r.gamma)
        .fold(None, |m: Option<f64>, g| Some(m.map_or(g, |m| m.max(g))))
        .ok_or(Error::NoActiveRoute)
}

/// A validated instance with its derived coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub config: InstanceConfig,
    pub routes: Vec<RouteParams>,
    derived: Vec<DerivedRoute>,
}

impl Instance {
    pub fn new(config: InstanceConfig, routes: Vec<RouteParams>) -> Result<Self> {
        config.validate()?;
        if routes.is_empty() {
            return Err(Error::InvalidConfig("instance has no routes".into()));
        }
        let derived = routes
            .iter()
            .map(|r| derive_route(r, &config))
            .collect::<Result<Vec<_>>>()?;
        Ok(Instance {
            config,
            routes,
            derived,
        })
    }

    pub fn len(&self) -> usize {
        self.routes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.routes.is_empty()
    }

    pub fn derived(&self) -> &[DerivedRoute] {
        &self.derived
    }

    pub fn total_drivers(&self) -> f64 {
        self.config.total_drivers
    }

    /// Same routes, different driver mass.
    pub fn with_total_drivers(&self, d: f64) -> Result<Self> {
        let mut config = self.config.clone();
        config.total_drivers = d;
        Instance::new(config, self.routes.clone())
    }

    pub fn margins(&self) -> Vec<f64> {
        self.derived.iter().map(|d| d.p).collect()
    }

    pub fn curves(&self) -> Vec<DemandCurve> {
        self.derived.iter().map(|d| d.curve()).collect()
    }

    pub fn linearized_curves(&self) -> Vec<DemandCurve> {
        self.derived.iter().map(|d| d.linearized_curve()).collect()
    }

    pub fn gamma(&self) -> Result<f64> {
        instance_gamma(&self.derived)
    }

    /// Sum of `k̃*` over active routes.
    pub fn saturation_mass(&self) -> f64 {
        self.derived.iter().map(|d| d.k_tilde_star).sum()
    }

    /// `(p_max, p_min)` over active routes.
    pub fn profit_extremes(&self) -> Result<(f64, f64)> {
        let active: Vec<f64> = self
            .derived
            .iter()
            .filter(|d| d.active)
            .map(|d| d.p)
            .collect();
        if active.is_empty() {
            return Err(Error::NoActiveRoute);
        }
        let max = active.iter().cloned().fold(f64::MIN, f64::max);
        let min = active.iter().cloned().fold(f64::MAX, f64::min);
        Ok((max, min))
    }

    /// `min l / max l` over all routes.
    pub fn travel_time_spread(&self) -> f64 {
        let ls = self.routes.iter().map(|r| r.travel_time);
        let max = ls.clone().fold(f64::MIN, f64::max);
        let min = ls.fold(f64::MAX, f64::min);
        min / max
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    pub(crate) fn cfg() -> InstanceConfig {
        InstanceConfig {
            capacity: 4.0,
            t1: 0.0,
            t2: 420.0,
            total_drivers: 25.0,
            eta_e: 0.61,
            eta_l: 2.4,
            eta_t: 2.5,
            money_per_minute: 2.5,
        }
    }

    fn route(s: f64) -> RouteParams {
        RouteParams {
            id: "r".into(),
            fare: 10.0,
            travel_time: 10.0,
            trip_cost: 0.0,
            total_demand: 4200.0,
            outside: OutsideOption::Direct(s),
        }
    }

    #[test]
    fn linear_fixture_coefficients() {
        let d = derive_route(&route(0.0), &cfg()).unwrap();
        assert_relative_eq!(d.k_star, 50.0, max_relative = 1e-12);
        assert_eq!(d.k_tilde_star, d.k_star);
        assert_eq!(d.zeta2, 0.0);
        assert_relative_eq!(d.zeta_tilde, 84.0, max_relative = 1e-12);
        assert_relative_eq!(d.per_driver_profit(0.0), 840.0, max_relative = 1e-12);
        assert_relative_eq!(d.per_driver_profit(100.0), 420.0, max_relative = 1e-12);
        assert_relative_eq!(d.minibus_demand(25.0), 2100.0, max_relative = 1e-12);
        assert_eq!(d.gamma, 0.0);
    }

    #[test]
    fn queuing_fixture_matches_hand_values() {
        let d = derive_route(&route(30.0), &cfg()).unwrap();
        // second threshold 2lΛ/(F·S·g) evaluated separately
        let g = (0.61 + 2.4) / (0.61 * 2.4);
        let second = 2.0 * 10.0 * 4200.0 / (4.0 * 30.0 * g);
        assert_relative_eq!(second, 340.47, max_relative = 1e-4);
        assert_relative_eq!(d.k_tilde_star, 50.0, max_relative = 1e-12);
        assert_relative_eq!(d.gamma, 0.14686, max_relative = 1e-4);
        assert_relative_eq!(d.zeta1, 96.336, max_relative = 1e-4);
        assert_relative_eq!(d.marginal_value(1.0, 0.0), d.zeta1, max_relative = 1e-12);
        assert_relative_eq!(d.minibus_demand(25.0), 2254.2, max_relative = 1e-4);
        assert_relative_eq!(d.service_time(25.0).unwrap(), 450.84, max_relative = 1e-4);
        assert_relative_eq!(d.per_driver_profit(25.0), 901.68, max_relative = 1e-4);
        assert_relative_eq!(d.queue_threshold(25.0), 408.56, max_relative = 1e-4);
        assert_eq!(d.service_time(50.0).unwrap(), 420.0);
        assert_relative_eq!(d.linearized_demand(25.0), 2100.0, max_relative = 1e-12);
        assert_eq!(d.minibus_demand(d.k_tilde_star), 4200.0);
        assert_eq!(d.marginal_value(1.0, 100.0), 0.0);
    }

    #[test]
    fn schedule_at_queuing_fixture() {
        let d = derive_route(&route(30.0), &cfg()).unwrap();
        let r = d.rider_schedule(25.0).unwrap();
        assert_relative_eq!(r.n_early, 5.0 * 30.0 / 0.61, max_relative = 1e-12);
        assert_relative_eq!(r.n_late, 62.5, max_relative = 1e-12);
        assert_relative_eq!(r.total_length(), d.service_time(25.0).unwrap(), max_relative = 1e-12);
        let s0 = derive_route(&route(0.0), &cfg()).unwrap().rider_schedule(25.0).unwrap();
        assert_eq!((s0.n_early, s0.n_late), (0.0, 0.0));
        assert!(d.rider_schedule(50.0).is_err());
    }

    #[test]
    fn large_advantage_means_queue_bound_service_time() {
        // S above S̄(25) = 408.56 puts the route in the queue-bound case
        let d = derive_route(&route(500.0), &cfg()).unwrap();
        let t = d.service_time(25.0).unwrap();
        assert_relative_eq!(t, 4200.0 / 5.0, max_relative = 1e-12);
        assert!(d.rider_schedule(25.0).is_err());
    }

    #[test]
    fn negative_advantage_deactivates() {
        let d = derive_route(&route(-1.0), &cfg()).unwrap();
        assert!(!d.active);
        assert_eq!(d.minibus_demand(1e6), 0.0);
        assert_eq!(d.per_driver_profit(0.0), 0.0);
        assert!(d.service_time(1.0).is_err());
    }

    #[test]
    fn derived_advantage_uses_money_rate() {
        let mut r = route(0.0);
        r.outside = OutsideOption::Cost(30.0);
        // 30 − (10 + 2.5·10)/2.5 = 16
        assert_relative_eq!(cost_advantage(&r, &cfg()), 16.0, max_relative = 1e-12);
    }

    #[test]
    fn rejects_negative_profit() {
        let mut r = route(0.0);
        r.trip_cost = 50.0;
        assert!(matches!(derive_route(&r, &cfg()), Err(Error::NegativeProfit { .. })));
    }

    #[test]
    fn gamma_is_max_over_active() {
        let mut a = derive_route(&route(0.0), &cfg()).unwrap();
        let mut b = a.clone();
        a.gamma = 0.1;
        b.gamma = 0.2;
        assert_eq!(instance_gamma(&[a.clone(), b]).unwrap(), 0.2);
        a.active = false;
        assert!(instance_gamma(&[a]).is_err());
    }
}
