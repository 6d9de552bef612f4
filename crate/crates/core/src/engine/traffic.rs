//! Traffic generation: fixed source-to-destination flows with Poisson
//! arrivals, plus a deterministic injection list for tests.

use rand::Rng;
use rand_chacha::ChaCha12Rng;

/// An application packet traveling source to final destination.
#[derive(Debug, Clone, PartialEq)]
pub struct Packet {
    pub id: u64,
    pub src: usize,
    pub dst: usize,
    pub generated_at: f64,
    pub size_bytes: u32,
    /// Custodians so far, in order (source first).
    pub hops: Vec<usize>,
}

/// A fixed traffic flow generating packets at `rate` per second.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Flow {
    pub src: usize,
    pub dst: usize,
    pub rate: f64,
}

/// Where packets come from.
#[derive(Debug, Clone)]
pub enum TrafficSpec {
    /// Poisson arrivals on each flow.
    Poisson { flows: Vec<Flow> },
    /// Exact arrival list `(time, src, dst)` for hand-built traces; must be
    /// sorted by time.
    Injected { arrivals: Vec<(f64, usize, usize)> },
}

impl TrafficSpec {
    /// Draws `count` random flows among distinct reachable node pairs.
    /// Pairs without a route are skipped, as are degenerate self-pairs;
    /// a pair is retried a bounded number of times before giving up.
    pub fn random_flows(
        count: usize,
        n_nodes: usize,
        rate: f64,
        reachable: impl Fn(usize, usize) -> bool,
        rng: &mut ChaCha12Rng,
    ) -> Self {
        let mut flows = Vec::with_capacity(count);
        for _ in 0..count {
            for _attempt in 0..200 {
                let src = rng.gen_range(0..n_nodes);
                let dst = rng.gen_range(0..n_nodes);
                if src != dst && reachable(src, dst) {
                    flows.push(Flow { src, dst, rate });
                    break;
                }
            }
        }
        TrafficSpec::Poisson { flows }
    }

    pub fn flow_count(&self) -> usize {
        match self {
            TrafficSpec::Poisson { flows } => flows.len(),
            TrafficSpec::Injected { arrivals } => arrivals.len(),
        }
    }
}

/// Exponential interarrival draw; `u` uniform in [0, 1).
pub fn exp_interarrival(rate: f64, u: f64) -> f64 {
    -(1.0 - u).ln() / rate
}
