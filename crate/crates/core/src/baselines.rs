//! Comparison MAC protocols on the same engine: always-on CSMA/CA and a
//! synchronized duty-cycled listener in the S-MAC family.
//!
//! Both reuse the data/grant exchange of the main protocol so the three
//! MACs differ only in when radios listen and when senders may contend.

use std::collections::{HashMap, VecDeque};

use rand::Rng;

use crate::config::ScenarioConfig;
use crate::engine::{
    Event, EventKind, FrameKind, MacProtocol, Packet, Reception, SimCore, TimerTag,
};
use crate::lmac::routing::RoutingTable;
use crate::metrics::Mode;

/// Synchronized listen/sleep schedule parameters.
#[derive(Debug, Clone, Copy)]
pub struct DutyCycleParams {
    pub listen: f64,
    pub sleep: f64,
}

impl DutyCycleParams {
    pub fn period(&self) -> f64 {
        self.listen + self.sleep
    }

    pub fn duty_cycle(&self) -> f64 {
        self.listen / self.period()
    }
}

#[derive(Debug, Clone, Copy)]
struct AwaitGrant {
    generation: u64,
}

#[derive(Debug, Default)]
struct BaselineNode {
    queue: VecDeque<Packet>,
    retries: u32,
    contending: bool,
    backoff_generation: u64,
    awaiting: Option<AwaitGrant>,
    await_generation: u64,
}

/// A grant in flight, waiting to commit its data exchange.
#[derive(Debug, Clone, Copy)]
struct PendingExchange {
    data_record: usize,
    sender: usize,
    receiver: usize,
}

/// Contention/exchange machinery shared by both baselines.
struct Contention {
    routes: RoutingTable,
    nodes: Vec<BaselineNode>,
    pending: HashMap<usize, PendingExchange>,
    cw_min: u32,
    cw_max: u32,
    mini_slot: f64,
    retry_limit: u32,
}

impl Contention {
    fn new(cfg: &ScenarioConfig, routes: RoutingTable) -> Self {
        let nodes = (0..cfg.n_nodes).map(|_| BaselineNode::default()).collect();
        Self {
            routes,
            nodes,
            pending: HashMap::new(),
            cw_min: cfg.cw_min,
            cw_max: cfg.cw_max,
            mini_slot: cfg.mini_slot,
            retry_limit: cfg.retry_limit,
        }
    }

    fn window(&self, retries: u32) -> u32 {
        let grown = (self.cw_min as u64) << retries.min(16);
        grown.min(self.cw_max as u64).max(1) as u32
    }

    fn exchange_time(&self, core: &SimCore) -> f64 {
        core.params.data_duration() + core.params.grant_duration() + 2.0 * self.mini_slot
    }

    /// Draws a backoff and schedules its expiry; `deadline` caps the draw
    /// window so the whole exchange finishes in time (infinity = no cap).
    /// `min_wait` shifts the draw so redraws always advance time.
    fn begin(&mut self, core: &mut SimCore, node: usize, deadline: f64, min_wait: u64) {
        if self.nodes[node].contending
            || self.nodes[node].awaiting.is_some()
            || self.nodes[node].queue.is_empty()
        {
            return;
        }
        let cw = self.window(self.nodes[node].retries) as i64;
        let draws = if deadline.is_finite() {
            let fit = ((deadline - core.time - self.exchange_time(core)) / self.mini_slot).floor() as i64;
            cw.min(fit + 1 - min_wait as i64)
        } else {
            cw
        };
        if draws <= 0 {
            return;
        }
        let draw = min_wait + core.rng.gen_range(0..draws as u64);
        let me = &mut self.nodes[node];
        me.contending = true;
        me.backoff_generation += 1;
        core.queue.push(
            core.time + draw as f64 * self.mini_slot,
            EventKind::BackoffExpiry { node, generation: me.backoff_generation },
        );
    }

    /// Backoff expiry: transmit if the channel is clear, otherwise let the
    /// caller decide how to re-enter contention.
    fn expire(&mut self, core: &mut SimCore, node: usize, generation: u64, deadline: f64) {
        if self.nodes[node].backoff_generation != generation || !self.nodes[node].contending {
            return;
        }
        self.nodes[node].contending = false;
        if core.mode(node) != Mode::Idle || core.carrier_busy(node) {
            // Busy (or mid-reception/transmission): redraw with the same
            // window, waiting out at least one mini-slot.
            self.begin(core, node, deadline, 1);
            return;
        }
        if deadline.is_finite() && core.time + self.exchange_time(core) > deadline {
            return;
        }
        let head = self.nodes[node].queue.front().expect("contention without a queued packet");
        let next_hop = self.routes.next_hop(node, head.dst).expect("queued packet lost its route");
        let packet_id = head.id;
        let record = core.begin_transmission(node, FrameKind::Data, next_hop, Some(packet_id));
        let me = &mut self.nodes[node];
        me.await_generation += 1;
        me.awaiting = Some(AwaitGrant { generation: me.await_generation });
        let _ = record;
    }

    /// Frame-start reaction common to both baselines: lock onto grants we
    /// are waiting for and onto data addressed to us.
    fn hear(&mut self, core: &mut SimCore, listener: usize, record: usize) {
        if core.mode(listener) != Mode::Idle {
            return;
        }
        let frame = core.channel.record(record).frame;
        if self.nodes[listener].awaiting.is_some() {
            if frame.kind == FrameKind::Grant && frame.dst == listener {
                core.lock(listener, record);
            }
            return;
        }
        if frame.kind == FrameKind::Data && frame.dst == listener {
            core.lock(listener, record);
        }
    }

    /// Reception resolution; returns receivers/senders whose queues changed
    /// so the caller can re-enter contention per its own rules.
    fn resolve(
        &mut self,
        core: &mut SimCore,
        rx: usize,
        record: usize,
        outcome: Reception,
    ) -> Vec<usize> {
        let rec = *core.channel.record(record);
        let mut touched = Vec::new();
        match rec.frame.kind {
            FrameKind::Data => match outcome {
                Reception::Delivered => {
                    let grant = core.begin_transmission(rx, FrameKind::Grant, rec.frame.src, rec.frame.packet);
                    self.pending.insert(
                        grant,
                        PendingExchange { data_record: record, sender: rec.frame.src, receiver: rx },
                    );
                }
                _ => core.set_mode(rx, Mode::Idle),
            },
            FrameKind::Grant => {
                let pend = self.pending.remove(&record);
                match outcome {
                    Reception::Delivered => {
                        let pend = pend.expect("grant resolved without pending exchange");
                        debug_assert_eq!(pend.sender, rx);
                        core.set_mode(rx, Mode::Idle);
                        self.commit(core, pend);
                        touched.push(pend.sender);
                        touched.push(pend.receiver);
                    }
                    _ => core.set_mode(rx, Mode::Idle),
                }
            }
        }
        touched
    }

    /// Custody handoff after a clean grant.
    fn commit(&mut self, core: &mut SimCore, pend: PendingExchange) {
        let sender = pend.sender;
        self.nodes[sender].awaiting = None;
        self.nodes[sender].retries = 0;
        let mut packet = self.nodes[sender].queue.pop_front().expect("committed packet missing");
        debug_assert_eq!(Some(packet.id), core.channel.record(pend.data_record).frame.packet);
        let delivered_at = core.channel.record(pend.data_record).end;
        packet.hops.push(pend.receiver);
        if packet.dst == pend.receiver {
            core.report.record_delivery(packet.id, packet.generated_at, delivered_at);
        } else {
            self.nodes[pend.receiver].queue.push_back(packet);
        }
    }

    /// Transmitter-side completion; returns true for data frames so the
    /// caller arms the grant timeout.
    fn tx_done(&mut self, core: &mut SimCore, record: usize) -> bool {
        let rec = *core.channel.record(record);
        core.set_mode(rec.tx_node, Mode::Idle);
        match rec.frame.kind {
            FrameKind::Data => {
                let waiting = self.nodes[rec.tx_node].awaiting.expect("data sent without grant wait");
                core.queue.push(
                    core.time + core.params.grant_duration() + self.mini_slot,
                    EventKind::TimerGeneric {
                        node: rec.tx_node,
                        tag: TimerTag::GrantTimeout { generation: waiting.generation },
                    },
                );
                true
            }
            FrameKind::Grant => {
                self.pending.remove(&record);
                false
            }
        }
    }

    /// Grant timeout: one more failed attempt, drop past the retry budget.
    /// Returns true if the timeout was live.
    fn timeout(&mut self, core: &mut SimCore, node: usize, generation: u64) -> bool {
        let Some(waiting) = self.nodes[node].awaiting else {
            return false;
        };
        if waiting.generation != generation {
            return false;
        }
        self.nodes[node].awaiting = None;
        self.nodes[node].retries += 1;
        if self.nodes[node].retries > self.retry_limit {
            if self.nodes[node].queue.pop_front().is_some() {
                core.report.dropped += 1;
            }
            self.nodes[node].retries = 0;
        }
        true
    }

    fn queued(&self) -> u64 {
        self.nodes.iter().map(|n| n.queue.len() as u64).sum()
    }
}

/// Always-on CSMA/CA: radios never sleep, queued packets contend
/// immediately, carrier sensing plus binary exponential backoff arbitrate.
pub struct CsmaProtocol {
    c: Contention,
}

impl CsmaProtocol {
    pub fn new(cfg: &ScenarioConfig, routes: RoutingTable) -> Self {
        Self { c: Contention::new(cfg, routes) }
    }
}

impl CsmaProtocol {
    fn grant_timed_out(&mut self, core: &mut SimCore, node: usize, generation: u64) {
        if self.c.timeout(core, node, generation) {
            self.c.begin(core, node, f64::INFINITY, 0);
        }
    }
}

impl MacProtocol for CsmaProtocol {
    fn start(&mut self, _core: &mut SimCore) {
        // Nodes idle-listen from the first instant; traffic drives the rest.
    }

    fn on_packet(&mut self, core: &mut SimCore, node: usize, packet: Packet) {
        if self.c.routes.next_hop(node, packet.dst).is_none() {
            core.report.dropped += 1;
            return;
        }
        self.c.nodes[node].queue.push_back(packet);
        self.c.begin(core, node, f64::INFINITY, 0);
    }

    fn on_event(&mut self, core: &mut SimCore, ev: Event) {
        match ev.kind {
            EventKind::BackoffExpiry { node, generation } => {
                self.c.expire(core, node, generation, f64::INFINITY);
            }
            EventKind::TimerGeneric { node, tag: TimerTag::GrantTimeout { generation } } => {
                self.grant_timed_out(core, node, generation);
            }
            _ => {}
        }
    }

    fn on_frame_start(&mut self, core: &mut SimCore, listener: usize, record: usize) {
        self.c.hear(core, listener, record);
    }

    fn on_reception(&mut self, core: &mut SimCore, rx: usize, record: usize, outcome: Reception) {
        for node in self.c.resolve(core, rx, record, outcome) {
            self.c.begin(core, node, f64::INFINITY, 0);
        }
    }

    fn on_tx_complete(&mut self, core: &mut SimCore, record: usize) {
        self.c.tx_done(core, record);
        let tx = core.channel.record(record).tx_node;
        self.c.begin(core, tx, f64::INFINITY, 0);
    }

    fn finish(&mut self, _core: &mut SimCore) {}

    fn queued_packets(&self) -> u64 {
        self.c.queued()
    }
}

/// Network-wide synchronized duty cycling: everyone listens during
/// `[k*T, k*T + listen)` and sleeps the rest of each period. Exchanges must
/// fit inside a listen window; queued packets wait out the sleep span.
pub struct DutyCycleProtocol {
    c: Contention,
    params: DutyCycleParams,
    window_end: f64,
    in_window: bool,
}

impl DutyCycleProtocol {
    pub fn new(cfg: &ScenarioConfig, routes: RoutingTable) -> Self {
        Self {
            c: Contention::new(cfg, routes),
            params: DutyCycleParams { listen: cfg.duty_listen, sleep: cfg.duty_sleep },
            window_end: 0.0,
            in_window: false,
        }
    }

    fn contend_all(&mut self, core: &mut SimCore) {
        for node in 0..self.c.nodes.len() {
            self.c.begin(core, node, self.window_end, 0);
        }
    }

    fn grant_timed_out(&mut self, core: &mut SimCore, node: usize, generation: u64) {
        if self.c.timeout(core, node, generation) && self.in_window {
            self.c.begin(core, node, self.window_end, 0);
        }
    }
}

impl MacProtocol for DutyCycleProtocol {
    fn start(&mut self, core: &mut SimCore) {
        core.queue.push(0.0, EventKind::TimerGeneric { node: 0, tag: TimerTag::WindowStart });
    }

    fn on_packet(&mut self, core: &mut SimCore, node: usize, packet: Packet) {
        if self.c.routes.next_hop(node, packet.dst).is_none() {
            core.report.dropped += 1;
            return;
        }
        self.c.nodes[node].queue.push_back(packet);
        if self.in_window {
            self.c.begin(core, node, self.window_end, 0);
        }
    }

    fn on_event(&mut self, core: &mut SimCore, ev: Event) {
        match ev.kind {
            EventKind::TimerGeneric { tag: TimerTag::WindowStart, .. } => {
                self.in_window = true;
                self.window_end = core.time + self.params.listen;
                core.queue.push(self.window_end, EventKind::TimerGeneric {
                    node: 0,
                    tag: TimerTag::WindowEnd,
                });
                for node in 0..core.n_nodes() {
                    core.set_mode(node, Mode::Idle);
                }
                self.contend_all(core);
            }
            EventKind::TimerGeneric { tag: TimerTag::WindowEnd, .. } => {
                self.in_window = false;
                core.queue.push(core.time + self.params.sleep, EventKind::TimerGeneric {
                    node: 0,
                    tag: TimerTag::WindowStart,
                });
                for node in 0..core.n_nodes() {
                    debug_assert!(core.locked_record(node).is_none(), "reception across window end");
                    let me = &mut self.c.nodes[node];
                    me.contending = false;
                    me.backoff_generation += 1;
                    core.set_mode(node, Mode::Sleep);
                }
            }
            EventKind::BackoffExpiry { node, generation } => {
                self.c.expire(core, node, generation, self.window_end);
            }
            EventKind::TimerGeneric { node, tag: TimerTag::GrantTimeout { generation } } => {
                self.grant_timed_out(core, node, generation);
            }
            _ => {}
        }
    }

    fn on_frame_start(&mut self, core: &mut SimCore, listener: usize, record: usize) {
        self.c.hear(core, listener, record);
    }

    fn on_reception(&mut self, core: &mut SimCore, rx: usize, record: usize, outcome: Reception) {
        for node in self.c.resolve(core, rx, record, outcome) {
            if self.in_window {
                self.c.begin(core, node, self.window_end, 0);
            }
        }
    }

    fn on_tx_complete(&mut self, core: &mut SimCore, record: usize) {
        self.c.tx_done(core, record);
        if self.in_window {
            let tx = core.channel.record(record).tx_node;
            self.c.begin(core, tx, self.window_end, 0);
        }
    }

    fn finish(&mut self, _core: &mut SimCore) {}

    fn queued_packets(&self) -> u64 {
        self.c.queued()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duty_cycle_fraction() {
        let p = DutyCycleParams { listen: 0.065, sleep: 0.585 };
        assert!((p.duty_cycle() - 0.1).abs() < 1e-12);
        assert!((p.period() - 0.65).abs() < 1e-12);
    }
}
