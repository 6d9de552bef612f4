//! The location-aware MAC protocol: slot-driven wake/sleep, first-in
//! first-receive arbitration of inter-block receptions, grant frames with a
//! listen deadline, and CSMA/CA contention inside blocks.
//!
//! Roles per slot:
//! - a block's members listen in their own inter slot until either a frame
//!   arrives or the theta deadline passes, then the block sleeps;
//! - nodes holding traffic for a neighboring block wake in that block's
//!   inter slot and contend for the air with slotted backoff;
//! - a block's members stay awake through their own intra slot and exchange
//!   in-block frames under plain CSMA/CA;
//! - everyone else sleeps.
//!
//! The first data frame arriving in a block's inter slot decides the single
//! reception of that slot: its destination locks on and answers with a
//! grant; every other member sleeps as soon as it overhears either the
//! frame or the grant. Senders that hear a competitor defer to the block's
//! next inter slot. A data/grant exchange transfers packet custody only
//! when the grant comes back clean, so a lost grant leaves the packet with
//! the sender for retry.

pub mod routing;

use std::collections::{BTreeMap, HashMap, VecDeque};

use rand::Rng;

use crate::config::ScenarioConfig;
use crate::engine::{
    Event, EventKind, FrameKind, MacProtocol, Packet, Reception, SimCore, TimerTag,
};
use crate::geometry::{chebyshev_distance, BlockGrid, BlockId};
use crate::metrics::Mode;
use crate::schedule::{build_superframe, SlotKind, SlotSchedule, SuperframeLayout};
use routing::RoutingTable;

/// Protocol tuning knobs.
#[derive(Debug, Clone, Copy)]
pub struct LmacParams {
    /// Fraction of an inter slot after which a block with no incoming
    /// traffic goes to sleep. Strictly between 0 and 1.
    pub theta: f64,
    pub cw_min: u32,
    pub cw_max: u32,
    pub mini_slot: f64,
    pub retry_limit: u32,
}

impl LmacParams {
    pub fn from_config(cfg: &ScenarioConfig) -> Self {
        Self {
            theta: cfg.theta,
            cw_min: cfg.cw_min,
            cw_max: cfg.cw_max,
            mini_slot: cfg.mini_slot,
            retry_limit: cfg.retry_limit,
        }
    }

    /// Contention window after `retries` failed attempts: binary exponential
    /// growth capped at `cw_max`.
    fn window(&self, retries: u32) -> u32 {
        let grown = (self.cw_min as u64) << retries.min(16);
        grown.min(self.cw_max as u64).max(1) as u32
    }
}

/// What a node is doing in the current slot.
#[derive(Debug, Default, Clone, Copy, PartialEq, Eq)]
enum SlotRole {
    /// Asleep; nothing to do this slot.
    #[default]
    Passive,
    /// Listening in its own block's inter slot.
    OwnInter,
    /// Competing to send into a neighboring block's inter slot.
    Contender(BlockId),
    /// Awake through its own block's intra slot.
    OwnIntra,
}

/// Which queue an exchange serves.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Target {
    Inter(BlockId),
    Intra,
}

#[derive(Debug, Clone, Copy)]
struct AwaitGrant {
    target: Target,
    data_record: usize,
    generation: u64,
}

#[derive(Debug, Default)]
struct LmacNode {
    block: BlockId,
    /// Outbound packets keyed by the next hop's block.
    inter_queues: BTreeMap<BlockId, VecDeque<Packet>>,
    inter_retries: BTreeMap<BlockId, u32>,
    intra_queue: VecDeque<Packet>,
    intra_retries: u32,
    role: SlotRole,
    /// Set once the node has gone down for the rest of an inter slot.
    slept: bool,
    contending: Option<Target>,
    backoff_generation: u64,
    awaiting: Option<AwaitGrant>,
    await_generation: u64,
}

/// Per-block state of the currently running inter slot.
#[derive(Debug, Clone, Copy)]
struct InterSlotState {
    /// The one member allowed to receive this slot, decided by the first
    /// arriving frame destined into the block.
    token: Option<usize>,
    theta_instant: f64,
    delivered: u32,
}

/// A grant in flight, waiting to commit its data exchange.
#[derive(Debug, Clone, Copy)]
struct PendingExchange {
    data_record: usize,
    sender: usize,
    receiver: usize,
}

pub struct LmacProtocol {
    layout: SuperframeLayout,
    routes: RoutingTable,
    params: LmacParams,
    nodes: Vec<LmacNode>,
    members: BTreeMap<BlockId, Vec<usize>>,
    inter_state: BTreeMap<BlockId, InterSlotState>,
    pending: HashMap<usize, PendingExchange>,
    /// Slots elapsed since time zero; boundary times are computed from this
    /// by one multiplication so they never drift from the layout.
    tick: u64,
    slot_kind: SlotKind,
    slot_start: f64,
    slot_end: f64,
    warned_far_hop: bool,
}

impl LmacProtocol {
    pub fn new(cfg: &ScenarioConfig, grid: BlockGrid, routes: RoutingTable, blocks: &[BlockId]) -> Self {
        let sched = SlotSchedule::build(&grid, cfg.slot_duration);
        let layout = build_superframe(&sched);
        let mut members: BTreeMap<BlockId, Vec<usize>> = BTreeMap::new();
        let nodes = blocks
            .iter()
            .enumerate()
            .map(|(id, &b)| {
                members.entry(b).or_default().push(id);
                LmacNode { block: b, ..Default::default() }
            })
            .collect();
        Self {
            layout,
            routes,
            params: LmacParams::from_config(cfg),
            nodes,
            members,
            inter_state: BTreeMap::new(),
            pending: HashMap::new(),
            tick: 0,
            slot_kind: SlotKind::Inter,
            slot_start: 0.0,
            slot_end: 0.0,
            warned_far_hop: false,
        }
    }

    fn members_of(&self, block: BlockId) -> &[usize] {
        self.members.get(&block).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Air time one data/grant exchange needs, plus scheduling guard.
    fn exchange_time(&self, core: &SimCore) -> f64 {
        core.params.data_duration() + core.params.grant_duration() + 2.0 * self.params.mini_slot
    }

    fn classify_and_enqueue(&mut self, core: &mut SimCore, node: usize, packet: Packet) {
        let Some(next_hop) = self.routes.next_hop(node, packet.dst) else {
            core.report.dropped += 1;
            return;
        };
        let own_block = self.nodes[node].block;
        let hop_block = core.blocks[next_hop];
        if hop_block == own_block {
            self.nodes[node].intra_queue.push_back(packet);
        } else {
            if chebyshev_distance(own_block, hop_block) > 1 && !self.warned_far_hop {
                self.warned_far_hop = true;
                core.report.warnings.push(format!(
                    "next hop {next_hop} of node {node} lies {} blocks away; \
                     block side shorter than range makes non-adjacent hops possible",
                    chebyshev_distance(own_block, hop_block)
                ));
            }
            self.nodes[node].inter_queues.entry(hop_block).or_default().push_back(packet);
        }
    }

    /// Starts slotted backoff toward a neighbor block's inter slot. The
    /// draw window is capped so the frame starts before the receivers'
    /// theta deadline and the whole exchange fits in the slot.
    fn begin_inter_contention(&mut self, core: &mut SimCore, node: usize, target: BlockId) {
        let retries = self.nodes[node].inter_retries.get(&target).copied().unwrap_or(0);
        let cw = self.params.window(retries);
        let mini = self.params.mini_slot;
        let slot_len = self.slot_end - self.slot_start;
        let theta_slots = (self.params.theta * slot_len / mini).ceil() as i64 - 1;
        let fit_slots = ((self.slot_end - self.slot_start - self.exchange_time(core)) / mini).floor() as i64;
        let draws = (cw as i64).min(theta_slots + 1).min(fit_slots + 1);
        if draws <= 0 {
            // No viable start instant this slot; wait for the next frame.
            self.nodes[node].contending = None;
            core.set_mode(node, Mode::Sleep);
            return;
        }
        let draw = core.rng.gen_range(0..draws as u64);
        let expiry = self.slot_start + draw as f64 * mini;
        let me = &mut self.nodes[node];
        me.backoff_generation += 1;
        me.contending = Some(Target::Inter(target));
        core.queue.push(expiry, EventKind::BackoffExpiry { node, generation: me.backoff_generation });
    }

    /// Starts CSMA backoff inside the node's own intra slot, from now.
    /// `min_wait` shifts the draw so redraws always advance time.
    fn begin_intra_contention(&mut self, core: &mut SimCore, node: usize, min_wait: u64) {
        let retries = self.nodes[node].intra_retries;
        let cw = self.params.window(retries);
        let mini = self.params.mini_slot;
        let fit_slots = ((self.slot_end - core.time - self.exchange_time(core)) / mini).floor() as i64;
        let draws = (cw as i64).min(fit_slots + 1 - min_wait as i64);
        if draws <= 0 {
            // Stay awake and listening; retry at the next intra slot.
            self.nodes[node].contending = None;
            return;
        }
        let draw = min_wait + core.rng.gen_range(0..draws as u64);
        let expiry = core.time + draw as f64 * mini;
        let me = &mut self.nodes[node];
        me.backoff_generation += 1;
        me.contending = Some(Target::Intra);
        core.queue.push(expiry, EventKind::BackoffExpiry { node, generation: me.backoff_generation });
    }

    fn queue_head(&self, node: usize, target: Target) -> Option<&Packet> {
        match target {
            Target::Inter(b) => self.nodes[node].inter_queues.get(&b).and_then(|q| q.front()),
            Target::Intra => self.nodes[node].intra_queue.front(),
        }
    }

    fn pop_queue(&mut self, node: usize, target: Target) -> Option<Packet> {
        match target {
            Target::Inter(b) => {
                let packet = self.nodes[node].inter_queues.get_mut(&b)?.pop_front();
                if self.nodes[node].inter_queues.get(&b).is_some_and(|q| q.is_empty()) {
                    self.nodes[node].inter_queues.remove(&b);
                }
                packet
            }
            Target::Intra => self.nodes[node].intra_queue.pop_front(),
        }
    }

    fn reset_retries(&mut self, node: usize, target: Target) {
        match target {
            Target::Inter(b) => {
                self.nodes[node].inter_retries.remove(&b);
            }
            Target::Intra => self.nodes[node].intra_retries = 0,
        }
    }

    /// Marks one failed exchange attempt; drops the head packet once the
    /// retry budget is spent.
    fn fail_exchange(&mut self, core: &mut SimCore, node: usize, target: Target) {
        let retries = match target {
            Target::Inter(b) => {
                let r = self.nodes[node].inter_retries.entry(b).or_insert(0);
                *r += 1;
                *r
            }
            Target::Intra => {
                self.nodes[node].intra_retries += 1;
                self.nodes[node].intra_retries
            }
        };
        if retries > self.params.retry_limit {
            if self.pop_queue(node, target).is_some() {
                core.report.dropped += 1;
            }
            self.reset_retries(node, target);
        }
    }

    /// The sender side of a handled inter slot is over; sleep out the rest.
    fn contender_done(&mut self, core: &mut SimCore, node: usize) {
        let me = &mut self.nodes[node];
        me.contending = None;
        me.backoff_generation += 1;
        if core.mode(node) != Mode::Sleep {
            core.set_mode(node, Mode::Sleep);
        }
    }

    fn handle_slot_start(&mut self, core: &mut SimCore, slot: usize) {
        self.slot_start = self.tick as f64 * self.layout.slot_duration;
        self.slot_end = (self.tick + 1) as f64 * self.layout.slot_duration;
        self.tick += 1;
        debug_assert!((core.time - self.slot_start).abs() < 1e-9);
        let descriptor = &self.layout.slots[slot - 1];
        self.slot_kind = descriptor.kind;
        let owners: Vec<BlockId> = descriptor.owners.clone();

        core.queue.push(self.slot_end, EventKind::SlotEnd { slot });
        let next = slot % self.layout.slots.len() + 1;
        core.queue.push(self.slot_end, EventKind::SlotStart { slot: next });

        self.inter_state.clear();
        if self.slot_kind == SlotKind::Inter {
            for &b in &owners {
                let theta_instant = self.slot_start
                    + self.params.theta * (self.slot_end - self.slot_start);
                self.inter_state.insert(b, InterSlotState { token: None, theta_instant, delivered: 0 });
                core.queue.push(theta_instant, EventKind::ThetaTimeout { block: b });
            }
        }

        for node in 0..self.nodes.len() {
            debug_assert!(self.nodes[node].awaiting.is_none(), "grant wait leaked across slots");
            let me = &mut self.nodes[node];
            me.slept = false;
            me.contending = None;
            me.backoff_generation += 1;

            let own = me.block;
            let owns_slot = owners.contains(&own);
            match self.slot_kind {
                SlotKind::Inter if owns_slot => {
                    self.nodes[node].role = SlotRole::OwnInter;
                    core.set_mode(node, Mode::Idle);
                }
                SlotKind::Inter => {
                    // Sender side: wake only if some owner block of this
                    // slot has queued traffic from this node.
                    let target = owners
                        .iter()
                        .copied()
                        .find(|b| self.nodes[node].inter_queues.get(b).is_some_and(|q| !q.is_empty()));
                    if let Some(b) = target {
                        self.nodes[node].role = SlotRole::Contender(b);
                        core.set_mode(node, Mode::Idle);
                        self.begin_inter_contention(core, node, b);
                    } else {
                        self.nodes[node].role = SlotRole::Passive;
                        core.set_mode(node, Mode::Sleep);
                    }
                }
                SlotKind::Intra if owns_slot => {
                    self.nodes[node].role = SlotRole::OwnIntra;
                    core.set_mode(node, Mode::Idle);
                    if !self.nodes[node].intra_queue.is_empty() {
                        self.begin_intra_contention(core, node, 0);
                    }
                }
                SlotKind::Intra => {
                    self.nodes[node].role = SlotRole::Passive;
                    core.set_mode(node, Mode::Sleep);
                }
            }
        }
    }

    /// True iff some frame audible to a member of `block` started in
    /// `[slot_start, before)`. Computed from the channel record log,
    /// independent of the per-node state machines.
    fn audible_arrival_before(&self, core: &SimCore, block: BlockId, before: f64) -> bool {
        let records = core.channel.records();
        let from = records.partition_point(|r| r.start < self.slot_start);
        records[from..]
            .iter()
            .take_while(|r| r.start < before)
            .any(|r| {
                self.members_of(block).iter().any(|&m| {
                    m != r.tx_node
                        && core.positions[r.tx_node].distance(&core.positions[m]) < core.params.range
                })
            })
    }

    fn handle_theta(&mut self, core: &mut SimCore, block: BlockId) {
        let Some(_st) = self.inter_state.get(&block) else {
            return;
        };
        for &m in &self.members_of(block).to_vec() {
            let node = &mut self.nodes[m];
            if node.role == SlotRole::OwnInter && !node.slept && core.mode(m) == Mode::Idle {
                // Heard nothing by the deadline; reception in progress
                // (Rx) takes priority and keeps the node up.
                node.slept = true;
                core.set_mode(m, Mode::Sleep);
            }
        }
    }

    fn handle_slot_end(&mut self, core: &mut SimCore, _slot: usize) {
        // Theta discipline monitor: a block that heard nothing by its
        // deadline must have slept through the slot remainder.
        let states: Vec<(BlockId, InterSlotState)> =
            self.inter_state.iter().map(|(b, s)| (*b, *s)).collect();
        for (block, st) in states {
            if self.audible_arrival_before(core, block, st.theta_instant) {
                continue;
            }
            for &m in self.members_of(block) {
                let ok = core.mode(m) == Mode::Sleep && core.mode_since(m) <= st.theta_instant + 1e-9;
                if !ok {
                    core.report.violations.push(format!(
                        "theta discipline: node {m} of block {block} awake after silent deadline \
                         at slot ending {:.6}",
                        core.time
                    ));
                }
            }
        }
    }

    fn handle_backoff(&mut self, core: &mut SimCore, node: usize, generation: u64) {
        if self.nodes[node].backoff_generation != generation {
            return;
        }
        let Some(target) = self.nodes[node].contending else {
            return;
        };
        if core.mode(node) != Mode::Idle || core.carrier_busy(node) {
            match target {
                // Someone else won the inter slot; try again next frame.
                Target::Inter(_) => self.contender_done(core, node),
                // Plain CSMA: redraw and keep listening, waiting out at
                // least one mini-slot.
                Target::Intra => self.begin_intra_contention(core, node, 1),
            }
            return;
        }
        if core.time + self.exchange_time(core) > self.slot_end {
            match target {
                Target::Inter(_) => self.contender_done(core, node),
                Target::Intra => self.nodes[node].contending = None,
            }
            return;
        }
        let head = self.queue_head(node, target).expect("contention without a queued packet");
        let packet_id = head.id;
        let dst = head.dst;
        let next_hop = self.routes.next_hop(node, dst).expect("queued packet lost its route");
        self.nodes[node].contending = None;
        let record = core.begin_transmission(node, FrameKind::Data, next_hop, Some(packet_id));
        let me = &mut self.nodes[node];
        me.await_generation += 1;
        me.awaiting = Some(AwaitGrant { target, data_record: record, generation: me.await_generation });
    }

    fn handle_frame_start(&mut self, core: &mut SimCore, listener: usize, record: usize) {
        if core.mode(listener) == Mode::Rx {
            // Mid-reception; an overlapping frame shows up as a collision
            // when the locked frame resolves.
            return;
        }
        let frame = core.channel.record(record).frame;

        if self.nodes[listener].awaiting.is_some() {
            if frame.kind == FrameKind::Grant && frame.dst == listener {
                core.lock(listener, record);
            }
            return;
        }

        match self.nodes[listener].role {
            SlotRole::OwnInter => {
                if self.nodes[listener].slept {
                    return;
                }
                let block = self.nodes[listener].block;
                let st = self.inter_state.get_mut(&block).expect("inter slot state missing");
                if frame.kind == FrameKind::Data && frame.dst == listener && st.token.is_none() {
                    st.token = Some(listener);
                    core.lock(listener, record);
                } else {
                    // Either the slot's reception is already spoken for or
                    // the traffic is for somebody else: sleep out the slot.
                    self.nodes[listener].slept = true;
                    core.set_mode(listener, Mode::Sleep);
                }
            }
            SlotRole::Contender(_) => {
                if self.nodes[listener].contending.is_some() {
                    // Heard a competitor (or its grant) first: lose this
                    // slot and retry at the block's next inter slot.
                    self.contender_done(core, listener);
                }
            }
            SlotRole::OwnIntra => {
                if frame.kind == FrameKind::Data
                    && frame.dst == listener
                    && core.mode(listener) == Mode::Idle
                {
                    core.lock(listener, record);
                }
            }
            SlotRole::Passive => {}
        }
    }

    /// Commits a successful exchange: the sender sheds the packet, the
    /// receiver takes custody (delivering it or queueing it onward).
    fn commit_exchange(&mut self, core: &mut SimCore, pend: PendingExchange) {
        let sender = pend.sender;
        let waiting = self.nodes[sender].awaiting.take().expect("commit without awaiting sender");
        debug_assert_eq!(waiting.data_record, pend.data_record);
        let mut packet = self.pop_queue(sender, waiting.target).expect("committed packet missing");
        debug_assert_eq!(Some(packet.id), core.channel.record(pend.data_record).frame.packet);
        self.reset_retries(sender, waiting.target);

        let delivered_at = core.channel.record(pend.data_record).end;
        packet.hops.push(pend.receiver);
        if packet.dst == pend.receiver {
            core.report.record_delivery(packet.id, packet.generated_at, delivered_at);
        } else {
            self.classify_and_enqueue(core, pend.receiver, packet);
        }

        match waiting.target {
            Target::Inter(_) => self.contender_done(core, sender),
            Target::Intra => {
                core.set_mode(sender, Mode::Idle);
                if !self.nodes[sender].intra_queue.is_empty() {
                    self.begin_intra_contention(core, sender, 0);
                }
            }
        }
    }

    fn handle_reception(&mut self, core: &mut SimCore, rx: usize, record: usize, outcome: Reception) {
        let rec = *core.channel.record(record);
        match rec.frame.kind {
            FrameKind::Data => match outcome {
                Reception::Delivered => {
                    if self.nodes[rx].role == SlotRole::OwnInter {
                        let block = self.nodes[rx].block;
                        if let Some(st) = self.inter_state.get_mut(&block) {
                            st.delivered += 1;
                            if st.delivered > 1 {
                                core.report.violations.push(format!(
                                    "fifr: block {block} delivered {} frames in one inter slot \
                                     ending {:.6}",
                                    st.delivered, self.slot_end
                                ));
                            }
                        }
                    }
                    let grant = core.begin_transmission(rx, FrameKind::Grant, rec.frame.src, rec.frame.packet);
                    self.pending.insert(
                        grant,
                        PendingExchange { data_record: record, sender: rec.frame.src, receiver: rx },
                    );
                }
                _ => {
                    // Corrupted reception: back to listening. Freeing the
                    // block token lets a later frame win the slot.
                    core.set_mode(rx, Mode::Idle);
                    if self.nodes[rx].role == SlotRole::OwnInter {
                        let block = self.nodes[rx].block;
                        if let Some(st) = self.inter_state.get_mut(&block) {
                            if st.token == Some(rx) {
                                st.token = None;
                            }
                        }
                    }
                }
            },
            FrameKind::Grant => {
                let pend = self.pending.remove(&record);
                match outcome {
                    Reception::Delivered => {
                        let pend = pend.expect("grant resolved without pending exchange");
                        debug_assert_eq!(pend.sender, rx);
                        self.commit_exchange(core, pend);
                    }
                    _ => {
                        // Grant lost: custody stays with the sender; its
                        // grant timeout drives the retry.
                        core.set_mode(rx, Mode::Idle);
                    }
                }
            }
        }
    }

    fn handle_tx_complete(&mut self, core: &mut SimCore, record: usize) {
        let rec = *core.channel.record(record);
        let tx = rec.tx_node;
        match rec.frame.kind {
            FrameKind::Data => {
                // Listen for the grant; give it one mini-slot of grace.
                core.set_mode(tx, Mode::Idle);
                let waiting = self.nodes[tx].awaiting.expect("data sent without grant wait");
                let deadline = core.time + core.params.grant_duration() + self.params.mini_slot;
                core.queue.push(
                    deadline,
                    EventKind::TimerGeneric {
                        node: tx,
                        tag: TimerTag::GrantTimeout { generation: waiting.generation },
                    },
                );
            }
            FrameKind::Grant => {
                // An uncommitted entry here means the grant was never even
                // locked by its addressee; the exchange failed.
                self.pending.remove(&record);
                match self.nodes[tx].role {
                    SlotRole::OwnInter => {
                        // This block's reception is done; sleep out the slot.
                        self.nodes[tx].slept = true;
                        core.set_mode(tx, Mode::Sleep);
                    }
                    _ => {
                        core.set_mode(tx, Mode::Idle);
                        if self.nodes[tx].role == SlotRole::OwnIntra
                            && self.nodes[tx].contending.is_none()
                            && self.nodes[tx].awaiting.is_none()
                            && !self.nodes[tx].intra_queue.is_empty()
                        {
                            self.begin_intra_contention(core, tx, 0);
                        }
                    }
                }
            }
        }
    }

    fn handle_grant_timeout(&mut self, core: &mut SimCore, node: usize, generation: u64) {
        let Some(waiting) = self.nodes[node].awaiting else {
            return;
        };
        if waiting.generation != generation {
            return;
        }
        self.nodes[node].awaiting = None;
        self.fail_exchange(core, node, waiting.target);
        match waiting.target {
            Target::Inter(_) => self.contender_done(core, node),
            Target::Intra => {
                // Keep listening; the retry happens next intra slot with a
                // doubled window.
            }
        }
    }

    /// Post-run slot-discipline check over the full transmission log: every
    /// data frame sits inside one slot of the right kind for its hop.
    fn check_slot_discipline(&self, core: &mut SimCore) {
        let mut problems = Vec::new();
        for rec in core.channel.records() {
            if rec.frame.kind != FrameKind::Data {
                continue;
            }
            let instant = self.layout.slot_at(rec.start);
            if rec.end > instant.end + 1e-9 {
                problems.push(format!(
                    "slot discipline: frame {} spans slots (tx {:.6}..{:.6}, slot ends {:.6})",
                    rec.frame.id, rec.start, rec.end, instant.end
                ));
                continue;
            }
            let src_block = core.blocks[rec.frame.src];
            let dst_block = core.blocks[rec.frame.dst];
            let owners = &instant.descriptor.owners;
            let ok = if src_block == dst_block {
                instant.descriptor.kind == SlotKind::Intra && owners.contains(&src_block)
            } else {
                instant.descriptor.kind == SlotKind::Inter && owners.contains(&dst_block)
            };
            if !ok {
                problems.push(format!(
                    "slot discipline: frame {} ({} -> {}) sent in {} slot {} owned by {:?}",
                    rec.frame.id,
                    rec.frame.src,
                    rec.frame.dst,
                    instant.descriptor.kind,
                    instant.descriptor.index,
                    owners
                ));
            }
        }
        core.report.violations.extend(problems);
    }
}

impl MacProtocol for LmacProtocol {
    fn start(&mut self, core: &mut SimCore) {
        core.queue.push(0.0, EventKind::SlotStart { slot: 1 });
    }

    fn on_packet(&mut self, core: &mut SimCore, node: usize, packet: Packet) {
        // Queue it; contention entry points are slot starts.
        self.classify_and_enqueue(core, node, packet);
    }

    fn on_event(&mut self, core: &mut SimCore, ev: Event) {
        match ev.kind {
            EventKind::SlotStart { slot } => self.handle_slot_start(core, slot),
            EventKind::SlotEnd { slot } => self.handle_slot_end(core, slot),
            EventKind::ThetaTimeout { block } => self.handle_theta(core, block),
            EventKind::BackoffExpiry { node, generation } => self.handle_backoff(core, node, generation),
            EventKind::TimerGeneric { node, tag: TimerTag::GrantTimeout { generation } } => {
                self.handle_grant_timeout(core, node, generation)
            }
            _ => {}
        }
    }

    fn on_frame_start(&mut self, core: &mut SimCore, listener: usize, record: usize) {
        self.handle_frame_start(core, listener, record);
    }

    fn on_reception(&mut self, core: &mut SimCore, rx: usize, record: usize, outcome: Reception) {
        self.handle_reception(core, rx, record, outcome);
    }

    fn on_tx_complete(&mut self, core: &mut SimCore, record: usize) {
        self.handle_tx_complete(core, record);
    }

    fn finish(&mut self, core: &mut SimCore) {
        self.check_slot_discipline(core);
    }

    fn queued_packets(&self) -> u64 {
        self.nodes
            .iter()
            .map(|n| {
                n.intra_queue.len() as u64
                    + n.inter_queues.values().map(|q| q.len() as u64).sum::<u64>()
            })
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> LmacParams {
        LmacParams { theta: 0.3, cw_min: 8, cw_max: 64, mini_slot: 0.001, retry_limit: 5 }
    }

    #[test]
    fn window_doubles_and_saturates() {
        let p = params();
        assert_eq!(p.window(0), 8);
        assert_eq!(p.window(1), 16);
        assert_eq!(p.window(2), 32);
        assert_eq!(p.window(3), 64);
        assert_eq!(p.window(10), 64);
    }

    #[test]
    fn window_never_zero() {
        let p = LmacParams { cw_min: 1, cw_max: 1, ..params() };
        assert_eq!(p.window(0), 1);
        assert_eq!(p.window(31), 1);
    }
}
