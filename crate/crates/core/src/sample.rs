//! Seeded random instances for bound certification and property tests.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::model::{derive_route, Instance, InstanceConfig, OutsideOption, RouteParams};

/// How the cost advantage `S` of each sampled route is drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AdvantageMode {
    /// Zero with probability 1/4, otherwise uniform on `[0, 60]`.
    Mixed,
    /// Uniform on `[0.5, 60]`; every demand curve is strictly concave.
    Positive,
    /// Identically zero; every demand curve is piecewise linear.
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplerOptions {
    pub min_routes: usize,
    pub max_routes: usize,
    pub advantage: AdvantageMode,
    pub total_drivers: f64,
}

impl Default for SamplerOptions {
    fn default() -> Self {
        SamplerOptions {
            min_routes: 2,
            max_routes: 6,
            advantage: AdvantageMode::Mixed,
            total_drivers: 100.0,
        }
    }
}

impl SamplerOptions {
    pub fn routes(mut self, n: usize) -> Self {
        self.min_routes = n;
        self.max_routes = n;
        self
    }

    pub fn advantage(mut self, mode: AdvantageMode) -> Self {
        self.advantage = mode;
        self
    }
}

pub fn base_config(total_drivers: f64) -> InstanceConfig {
    InstanceConfig {
        capacity: 4.0,
        t1: 0.0,
        t2: 420.0,
        total_drivers,
        eta_e: 0.61,
        eta_l: 2.4,
        eta_t: 2.5,
        money_per_minute: 2.5,
    }
}

/// One instance: `l ∈ [5, 40]`, fare `∈ [10, 60]`, trip cost `0.8·F·fare`,
/// demands scaled so that `Σ k̃*` is uniform on `[D/2, 2D]`.
pub fn sample_instance<R: Rng>(rng: &mut R, opts: &SamplerOptions) -> Result<Instance> {
    let cfg = base_config(opts.total_drivers);
    let n = rng.gen_range(opts.min_routes..=opts.max_routes);
    let mut routes: Vec<RouteParams> = (0..n)
        .map(|i| {
            let fare = rng.gen_range(10.0..=60.0);
            let s = match opts.advantage {
                AdvantageMode::Zero => 0.0,
                AdvantageMode::Positive => rng.gen_range(0.5..=60.0),
                AdvantageMode::Mixed => {
                    if rng.gen_bool(0.25) {
                        0.0
                    } else {
                        rng.gen_range(0.0..=60.0)
                    }
                }
            };
            RouteParams {
                id: format!("r{}", i + 1),
                fare,
                travel_time: rng.gen_range(5.0..=40.0),
                trip_cost: 0.8 * cfg.capacity * fare,
                total_demand: rng.gen_range(500.0..=5000.0),
                outside: OutsideOption::Direct(s),
            }
        })
        .collect();
    let target = rng.gen_range(0.5..=2.0) * opts.total_drivers;
    // k̃* is linear in Λ, so one rescale hits the target
    let mut saturation = 0.0;
    for r in &routes {
        saturation += derive_route(r, &cfg)?.k_tilde_star;
    }
    let scale = target / saturation;
    for r in &mut routes {
        r.total_demand *= scale;
    }
    Instance::new(cfg, routes)
}

/// `count` instances from a ChaCha8 stream seeded with `seed`.
pub fn sample_instances(seed: u64, count: usize, opts: &SamplerOptions) -> Result<Vec<Instance>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| sample_instance(&mut rng, opts)).collect()
}
