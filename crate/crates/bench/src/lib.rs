//! Fixtures shared by the benchmarks.

use senergy_core::{simulate, PolicyKind, SimConfig, Trace};

/// A seeded uniform-random trajectory with `steps` records.
pub fn sample_trace(n: usize, rho: f64, steps: usize, seed: u64) -> Trace {
    let mut cfg = SimConfig::new(n, rho, PolicyKind::UniformRandom, seed);
    cfg.steps_cap = steps;
    cfg.diameter_cutoff = 0.0;
    simulate(&cfg).expect("fixture parameters are valid")
}
