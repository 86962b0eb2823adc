#![allow(dead_code)]

use proptest::prelude::*;
use transit_core::sample::{sample_instance, AdvantageMode, SamplerOptions};
use transit_core::{DerivedRoute, Instance, InstanceConfig, OutsideOption, RouteParams};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn config(d: f64) -> InstanceConfig {
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

pub fn route_params() -> impl Strategy<Value = RouteParams> {
    (
        10.0..60.0f64,
        5.0..40.0f64,
        0.0..0.9f64,
        500.0..5000.0f64,
        prop_oneof![Just(0.0), 0.0..60.0f64, 60.0..600.0f64],
    )
        .prop_map(|(fare, l, cost_share, lam, s)| RouteParams {
            id: "r".into(),
            fare,
            travel_time: l,
            trip_cost: cost_share * 4.0 * fare,
            total_demand: lam,
            outside: OutsideOption::Direct(s),
        })
}

pub fn derived_route() -> impl Strategy<Value = DerivedRoute> {
    route_params().prop_map(|r| transit_core::derive_route(&r, &config(1.0)).unwrap())
}

pub fn instance(n: std::ops::RangeInclusive<usize>, mode: AdvantageMode) -> impl Strategy<Value = Instance> {
    any::<u64>().prop_map(move |seed| seeded(seed, *n.start(), *n.end(), mode))
}

pub fn seeded(seed: u64, min: usize, max: usize, mode: AdvantageMode) -> Instance {
    let opts = SamplerOptions {
        min_routes: min,
        max_routes: max,
        advantage: mode,
        ..SamplerOptions::default()
    };
    sample_instance(&mut ChaCha8Rng::seed_from_u64(seed), &opts).unwrap()
}

/// Rider mass served, written from the primitives rather than the cached coefficients.
pub fn demand_oracle(cfg: &InstanceConfig, r: &RouteParams, s: f64, x: f64) -> f64 {
    let delta = cfg.t2 - cfg.t1;
    let g = (cfg.eta_e + cfg.eta_l) / (cfg.eta_e * cfg.eta_l);
    let mu = x * cfg.capacity / (2.0 * r.travel_time);
    let lam_rate = r.total_demand / delta;
    let queued = mu * delta + mu * s * g * (1.0 - mu / lam_rate);
    queued.min(r.total_demand)
}
