//! Per-node mode-time accounting, energy computation and delivery/delay
//! statistics.
//!
//! The radio is in exactly one of four modes at any instant; the ledger
//! accumulates the time each node spends in each mode and converts the
//! totals to joules with per-mode powers. The summary report adds packet
//! counters and end-to-end delay statistics over delivered packets.

use std::collections::HashSet;

/// Radio operating mode of a node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    Sleep,
    Idle,
    Tx,
    Rx,
}

impl Mode {
    pub const ALL: [Mode; 4] = [Mode::Sleep, Mode::Idle, Mode::Tx, Mode::Rx];

    fn index(self) -> usize {
        match self {
            Mode::Sleep => 0,
            Mode::Idle => 1,
            Mode::Tx => 2,
            Mode::Rx => 3,
        }
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Mode::Sleep => write!(f, "Sleep"),
            Mode::Idle => write!(f, "Idle"),
            Mode::Tx => write!(f, "Tx"),
            Mode::Rx => write!(f, "Rx"),
        }
    }
}

/// Power draw per radio mode, in watts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Powers {
    pub sleep: f64,
    pub idle: f64,
    pub tx: f64,
    pub rx: f64,
}

impl Default for Powers {
    fn default() -> Self {
        // Sensor-radio defaults: idle listening costs about as much as
        // receiving, sleep is orders of magnitude cheaper.
        Self { sleep: 9e-5, idle: 0.045, tx: 0.060, rx: 0.045 }
    }
}

impl Powers {
    pub fn of(&self, mode: Mode) -> f64 {
        match mode {
            Mode::Sleep => self.sleep,
            Mode::Idle => self.idle,
            Mode::Tx => self.tx,
            Mode::Rx => self.rx,
        }
    }
}

/// Accumulated per-node mode durations.
///
/// Intervals for a node must be recorded in order and must not overlap; the
/// ledger panics on an out-of-order interval since that can only be an
/// engine bug.
#[derive(Debug, Clone)]
pub struct EnergyLedger {
    /// `durations[node][mode]` in seconds.
    durations: Vec<[f64; 4]>,
    /// Per node, the end of the last recorded interval.
    recorded_to: Vec<f64>,
    pub powers: Powers,
}

impl EnergyLedger {
    pub fn new(n_nodes: usize, powers: Powers) -> Self {
        Self {
            durations: vec![[0.0; 4]; n_nodes],
            recorded_to: vec![0.0; n_nodes],
            powers,
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.durations.len()
    }

    /// Adds `[from_t, to_t)` in `mode` to a node's accumulator.
    pub fn record_mode(&mut self, node: usize, mode: Mode, from_t: f64, to_t: f64) {
        assert!(
            from_t <= to_t,
            "negative mode interval for node {node}: {from_t} > {to_t}"
        );
        let watermark = self.recorded_to[node];
        assert!(
            from_t >= watermark - 1e-9,
            "overlapping mode interval for node {node}: starts {from_t}, ledger at {watermark}"
        );
        self.durations[node][mode.index()] += to_t - from_t;
        self.recorded_to[node] = to_t;
    }

    /// Seconds the node has spent in `mode` so far.
    pub fn duration(&self, node: usize, mode: Mode) -> f64 {
        self.durations[node][mode.index()]
    }

    /// Total recorded time for a node, all modes.
    pub fn total_time(&self, node: usize) -> f64 {
        self.durations[node].iter().sum()
    }

    /// Energy consumed by a node in joules.
    pub fn energy(&self, node: usize) -> f64 {
        Mode::ALL
            .iter()
            .map(|&m| self.powers.of(m) * self.duration(node, m))
            .sum()
    }

    /// Network-wide energy in joules.
    pub fn total_energy(&self) -> f64 {
        (0..self.n_nodes()).map(|n| self.energy(n)).sum()
    }

    /// Fraction of recorded time the node was not asleep.
    pub fn awake_fraction(&self, node: usize) -> f64 {
        let total = self.total_time(node);
        if total == 0.0 {
            return 0.0;
        }
        (total - self.duration(node, Mode::Sleep)) / total
    }
}

/// Delay statistics over delivered packets, in seconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DelayStats {
    pub mean: f64,
    /// 95th percentile by the nearest-rank method.
    pub p95: f64,
    pub max: f64,
}

/// Final per-run report.
#[derive(Debug, Clone)]
pub struct SummaryReport {
    /// Seconds per node in [Sleep, Idle, Tx, Rx] order.
    pub mode_seconds: Vec<[f64; 4]>,
    pub per_node_energy: Vec<f64>,
    pub total_energy: f64,
    pub delivered: u64,
    pub generated: u64,
    pub dropped: u64,
    pub collisions: u64,
    /// Absent when nothing was delivered.
    pub delay: Option<DelayStats>,
    pub awake_fraction: Vec<f64>,
    /// Total energy divided by delivered count; absent when nothing was
    /// delivered.
    pub energy_per_delivered: Option<f64>,
    /// Invariant monitors append here; empty on a healthy run.
    pub violations: Vec<String>,
    /// Non-fatal configuration oddities detected during the run.
    pub warnings: Vec<String>,
}

impl SummaryReport {
    pub fn awake_fraction_mean(&self) -> f64 {
        if self.awake_fraction.is_empty() {
            return 0.0;
        }
        self.awake_fraction.iter().sum::<f64>() / self.awake_fraction.len() as f64
    }
}

/// Collects deliveries and packet counters during a run and assembles the
/// summary at the end.
#[derive(Debug, Clone, Default)]
pub struct ReportBuilder {
    delays: Vec<f64>,
    delivered_ids: HashSet<u64>,
    pub generated: u64,
    pub dropped: u64,
    pub collisions: u64,
    pub violations: Vec<String>,
    pub warnings: Vec<String>,
}

impl ReportBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Records the end-to-end delivery of a packet at its final destination.
    pub fn record_delivery(&mut self, packet_id: u64, generated_at: f64, delivered_at: f64) {
        assert!(
            delivered_at >= generated_at,
            "packet {packet_id} delivered before generation"
        );
        assert!(
            self.delivered_ids.insert(packet_id),
            "duplicate delivery of packet {packet_id}"
        );
        self.delays.push(delivered_at - generated_at);
    }

    pub fn delivered(&self) -> u64 {
        self.delays.len() as u64
    }

    /// Nearest-rank percentile of the delay sample.
    fn percentile(sorted: &[f64], p: f64) -> f64 {
        let rank = ((p * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
        sorted[rank - 1]
    }

    pub fn finalize(self, ledger: &EnergyLedger) -> SummaryReport {
        let mut sorted = self.delays.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let delay = if sorted.is_empty() {
            None
        } else {
            Some(DelayStats {
                mean: sorted.iter().sum::<f64>() / sorted.len() as f64,
                p95: Self::percentile(&sorted, 0.95),
                max: *sorted.last().unwrap(),
            })
        };
        let per_node_energy: Vec<f64> = (0..ledger.n_nodes()).map(|n| ledger.energy(n)).collect();
        let total_energy = per_node_energy.iter().sum();
        let delivered = self.delays.len() as u64;
        let mode_seconds = (0..ledger.n_nodes())
            .map(|n| {
                [
                    ledger.duration(n, Mode::Sleep),
                    ledger.duration(n, Mode::Idle),
                    ledger.duration(n, Mode::Tx),
                    ledger.duration(n, Mode::Rx),
                ]
            })
            .collect();
        SummaryReport {
            mode_seconds,
            per_node_energy,
            total_energy,
            delivered,
            generated: self.generated,
            dropped: self.dropped,
            collisions: self.collisions,
            delay,
            awake_fraction: (0..ledger.n_nodes()).map(|n| ledger.awake_fraction(n)).collect(),
            energy_per_delivered: if delivered > 0 {
                Some(total_energy / delivered as f64)
            } else {
                None
            },
            violations: self.violations,
            warnings: self.warnings,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn full_run_sleep_energy() {
        let mut ledger = EnergyLedger::new(1, Powers::default());
        ledger.record_mode(0, Mode::Sleep, 0.0, 500.0);
        assert!((ledger.duration(0, Mode::Sleep) - 500.0).abs() < 1e-12);
        assert!((ledger.energy(0) - 0.045).abs() < 1e-12);
    }

    #[test]
    fn full_run_idle_energy() {
        let mut ledger = EnergyLedger::new(1, Powers::default());
        ledger.record_mode(0, Mode::Idle, 0.0, 500.0);
        assert!((ledger.energy(0) - 22.5).abs() < 1e-12);
    }

    #[test]
    fn alternating_modes_partition_sim_time() {
        let mut ledger = EnergyLedger::new(1, Powers::default());
        let mut t = 0.0f64;
        let mut idle = true;
        while t < 10.0 {
            let next = (t + 0.13).min(10.0);
            ledger.record_mode(0, if idle { Mode::Idle } else { Mode::Sleep }, t, next);
            idle = !idle;
            t = next;
        }
        assert!((ledger.total_time(0) - 10.0).abs() < 1e-9);
    }

    #[test]
    #[should_panic(expected = "overlapping mode interval")]
    fn overlapping_interval_is_a_fault() {
        let mut ledger = EnergyLedger::new(1, Powers::default());
        ledger.record_mode(0, Mode::Idle, 0.0, 2.0);
        ledger.record_mode(0, Mode::Sleep, 1.0, 3.0);
    }

    #[test]
    fn single_delivery_stats() {
        let mut rb = ReportBuilder::new();
        rb.generated = 1;
        rb.record_delivery(7, 1.0, 1.2);
        let ledger = EnergyLedger::new(1, Powers::default());
        let report = rb.finalize(&ledger);
        let d = report.delay.unwrap();
        assert!((d.mean - 0.2).abs() < 1e-12);
        assert!((d.p95 - 0.2).abs() < 1e-12);
        assert!((d.max - 0.2).abs() < 1e-12);
    }

    #[test]
    fn p95_nearest_rank_of_ten_values() {
        let mut rb = ReportBuilder::new();
        for (i, d) in (1..=10).map(|i| (i, i as f64 / 10.0)) {
            rb.record_delivery(i as u64, 0.0, d);
        }
        let ledger = EnergyLedger::new(1, Powers::default());
        let report = rb.finalize(&ledger);
        // ceil(0.95 * 10) = 10th smallest value.
        assert!((report.delay.unwrap().p95 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn empty_delivery_set_has_absent_delay() {
        let rb = ReportBuilder::new();
        let ledger = EnergyLedger::new(2, Powers::default());
        let report = rb.finalize(&ledger);
        assert!(report.delay.is_none());
        assert!(report.energy_per_delivered.is_none());
    }

    #[test]
    #[should_panic(expected = "duplicate delivery")]
    fn duplicate_delivery_is_a_fault() {
        let mut rb = ReportBuilder::new();
        rb.record_delivery(3, 0.0, 1.0);
        rb.record_delivery(3, 0.0, 2.0);
    }

    proptest! {
        /// Random contiguous mode sequences always partition the covered
        /// time exactly across the four accumulators.
        #[test]
        fn mode_time_partition_invariant(
            steps in proptest::collection::vec((0u8..4, 1u32..1000), 1..60)
        ) {
            let mut ledger = EnergyLedger::new(1, Powers::default());
            let mut t = 0.0;
            for (m, dur) in steps {
                let mode = Mode::ALL[m as usize];
                let next = t + dur as f64 * 1e-3;
                ledger.record_mode(0, mode, t, next);
                t = next;
            }
            prop_assert!((ledger.total_time(0) - t).abs() < 1e-9);
        }

        /// Raising any single mode power never decreases a node's energy.
        #[test]
        fn energy_monotonic_in_powers(
            durs in proptest::collection::vec(0.0f64..100.0, 4),
            bump in 0.001f64..0.1,
            which in 0usize..4,
        ) {
            let base = Powers::default();
            let mut bumped = base;
            match which {
                0 => bumped.sleep += bump,
                1 => bumped.idle += bump,
                2 => bumped.tx += bump,
                _ => bumped.rx += bump,
            }
            let mut a = EnergyLedger::new(1, base);
            let mut b = EnergyLedger::new(1, bumped);
            let mut t = 0.0;
            for (i, d) in durs.iter().enumerate() {
                a.record_mode(0, Mode::ALL[i], t, t + d);
                b.record_mode(0, Mode::ALL[i], t, t + d);
                t += d;
            }
            prop_assert!(b.energy(0) >= a.energy(0) - 1e-12);
        }
    }
}
