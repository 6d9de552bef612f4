//! Shared scenario builders for the criterion benchmarks.

use lmac_core::config::{Protocol, ScenarioConfig};

/// A mid-size scenario that exercises slots, contention and routing without
/// taking seconds per iteration.
pub fn bench_scenario(protocol: Protocol, n_nodes: usize, sim_time: f64) -> ScenarioConfig {
    ScenarioConfig {
        protocol,
        n_nodes,
        sim_time,
        traffic_rate: 1.0,
        seed: 7,
        ..ScenarioConfig::default()
    }
}
