//! Deterministic discrete-event core: event loop, radio channel, mode
//! accounting and the top-level `run` entry point.
//!
//! The loop is strictly single threaded. All randomness comes from one
//! seeded stream consumed in event order, so identical (config, seed) pairs
//! replay bit-identically. Protocol behavior lives behind [`MacProtocol`];
//! the engine owns time, the channel, radio modes and the ledgers.

pub mod channel;
pub mod queue;
pub mod trace;
pub mod traffic;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

pub use channel::{Channel, Frame, FrameKind, Reception, TransmissionRecord};
pub use queue::{Event, EventKind, EventQueue, TimerTag};
pub use trace::{EventTrace, TraceRecord};
pub use traffic::{Flow, Packet, TrafficSpec};

use crate::baselines::{CsmaProtocol, DutyCycleProtocol};
use crate::config::{ConfigError, Protocol, ScenarioConfig};
use crate::geometry::{BlockGrid, BlockId, Position};
use crate::lmac::routing::RoutingTable;
use crate::lmac::LmacProtocol;
use crate::metrics::{EnergyLedger, Mode, ReportBuilder, SummaryReport};

/// Radio and timing constants shared by engine and protocols.
#[derive(Debug, Clone, Copy)]
pub struct SimParams {
    pub range: f64,
    pub bitrate: f64,
    pub packet_bytes: u32,
    pub grant_bytes: u32,
    pub sim_time: f64,
    pub mini_slot: f64,
}

impl SimParams {
    pub fn duration_of(&self, bytes: u32) -> f64 {
        8.0 * bytes as f64 / self.bitrate
    }

    pub fn data_duration(&self) -> f64 {
        self.duration_of(self.packet_bytes)
    }

    pub fn grant_duration(&self) -> f64 {
        self.duration_of(self.grant_bytes)
    }
}

/// Mutable simulation state owned by the engine and shared with the
/// protocol through method calls.
pub struct SimCore {
    pub params: SimParams,
    pub time: f64,
    pub queue: EventQueue,
    pub rng: ChaCha12Rng,
    pub positions: Vec<Position>,
    pub blocks: Vec<BlockId>,
    pub channel: Channel,
    pub ledger: EnergyLedger,
    pub report: ReportBuilder,
    modes: Vec<Mode>,
    mode_since: Vec<f64>,
    /// Earliest instant since which the node has been continuously in a
    /// listening-capable mode (Idle or Rx); infinity while it is not.
    listening_since: Vec<f64>,
    locked: Vec<Option<usize>>,
    next_frame_id: u64,
    tracing: bool,
    trace_records: Vec<TraceRecord>,
    current_record: Option<TraceRecord>,
}

impl SimCore {
    fn new(cfg: &ScenarioConfig, positions: Vec<Position>, blocks: Vec<BlockId>, rng: ChaCha12Rng) -> Self {
        let n = positions.len();
        let params = SimParams {
            range: cfg.range,
            bitrate: cfg.bitrate,
            packet_bytes: cfg.packet_size,
            grant_bytes: cfg.grant_size,
            sim_time: cfg.sim_time,
            mini_slot: cfg.mini_slot,
        };
        Self {
            params,
            time: 0.0,
            queue: EventQueue::new(),
            rng,
            positions,
            blocks,
            channel: Channel::new(cfg.range),
            ledger: EnergyLedger::new(n, cfg.powers),
            report: ReportBuilder::new(),
            modes: vec![Mode::Idle; n],
            mode_since: vec![0.0; n],
            listening_since: vec![0.0; n],
            locked: vec![None; n],
            next_frame_id: 0,
            tracing: cfg.trace,
            trace_records: Vec::new(),
            current_record: None,
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.positions.len()
    }

    pub fn mode(&self, node: usize) -> Mode {
        self.modes[node]
    }

    pub fn locked_record(&self, node: usize) -> Option<usize> {
        self.locked[node]
    }

    /// Time the node entered its current mode.
    pub fn mode_since(&self, node: usize) -> f64 {
        self.mode_since[node]
    }

    /// Moves a node to a new radio mode, closing the previous interval in
    /// the energy ledger.
    pub fn set_mode(&mut self, node: usize, mode: Mode) {
        let old = self.modes[node];
        if old == mode {
            return;
        }
        self.ledger.record_mode(node, old, self.mode_since[node], self.time);
        self.modes[node] = mode;
        self.mode_since[node] = self.time;
        let was_listening = matches!(old, Mode::Idle | Mode::Rx);
        let now_listening = matches!(mode, Mode::Idle | Mode::Rx);
        if now_listening && !was_listening {
            self.listening_since[node] = self.time;
        } else if !now_listening {
            self.listening_since[node] = f64::INFINITY;
        }
        if let Some(rec) = &mut self.current_record {
            rec.mode_changes.push((node, old, mode));
        }
    }

    /// Locks a listener onto an on-air frame: the node enters Rx and stays
    /// locked until the frame resolves at its end.
    pub fn lock(&mut self, node: usize, record: usize) {
        debug_assert!(self.locked[node].is_none(), "node {node} already locked");
        debug_assert!(matches!(self.modes[node], Mode::Idle));
        self.locked[node] = Some(record);
        self.set_mode(node, Mode::Rx);
    }

    /// Puts a frame on the air from `node`, schedules its start/end events
    /// and moves the node to Tx. The caller is responsible for slot-fit
    /// checks; the engine only rules out double transmission.
    pub fn begin_transmission(
        &mut self,
        node: usize,
        kind: FrameKind,
        dst: usize,
        packet: Option<u64>,
    ) -> usize {
        assert!(self.modes[node] != Mode::Tx, "node {node} is already transmitting");
        assert!(self.locked[node].is_none(), "node {node} is mid-reception");
        let bytes = match kind {
            FrameKind::Data => self.params.packet_bytes,
            FrameKind::Grant => self.params.grant_bytes,
        };
        let frame = Frame { id: self.next_frame_id, src: node, dst, kind, size_bytes: bytes, packet };
        self.next_frame_id += 1;
        let start = self.time;
        let end = start + self.params.duration_of(bytes);
        let record = self.channel.register(TransmissionRecord { frame, tx_node: node, start, end });
        self.set_mode(node, Mode::Tx);
        self.queue.push(start, EventKind::TxStart { record });
        self.queue.push(end, EventKind::TxEnd { record });
        record
    }

    /// Carrier sense at the current instant from `node`'s position.
    pub fn carrier_busy(&self, node: usize) -> bool {
        self.channel.carrier_busy(node, &self.positions, self.time)
    }

    /// Appends text to the current trace record's detail field.
    pub fn trace_detail(&mut self, text: &str) {
        if let Some(rec) = &mut self.current_record {
            if !rec.detail.is_empty() {
                rec.detail.push(' ');
            }
            rec.detail.push_str(text);
        }
    }

    fn trace_begin(&mut self, ev: &Event) {
        if !self.tracing {
            return;
        }
        let (kind, subject, detail) = match ev.kind {
            EventKind::SlotStart { slot } => ("SlotStart", format!("slot:{slot}"), String::new()),
            EventKind::SlotEnd { slot } => ("SlotEnd", format!("slot:{slot}"), String::new()),
            EventKind::TxStart { record } => {
                let r = self.channel.record(record);
                (
                    "TxStart",
                    format!("node:{}", r.tx_node),
                    format!(
                        "frame={} kind={} src={} dst={} bytes={}",
                        r.frame.id, r.frame.kind, r.frame.src, r.frame.dst, r.frame.size_bytes
                    ),
                )
            }
            EventKind::TxEnd { record } => {
                let r = self.channel.record(record);
                ("TxEnd", format!("node:{}", r.tx_node), format!("frame={}", r.frame.id))
            }
            EventKind::BackoffExpiry { node, .. } => ("BackoffExpiry", format!("node:{node}"), String::new()),
            EventKind::ThetaTimeout { block } => {
                ("ThetaTimeout", format!("block:{},{}", block.row, block.col), String::new())
            }
            EventKind::PacketGeneration { flow } => ("PacketGeneration", format!("flow:{flow}"), String::new()),
            EventKind::TimerGeneric { node, .. } => ("TimerGeneric", format!("node:{node}"), String::new()),
        };
        self.current_record = Some(TraceRecord {
            time: ev.time,
            seq: ev.seq,
            kind: kind.to_string(),
            subject,
            detail,
            mode_changes: Vec::new(),
        });
    }

    fn trace_end(&mut self) {
        if let Some(rec) = self.current_record.take() {
            self.trace_records.push(rec);
        }
    }
}

/// Callbacks a MAC protocol implements against the engine.
pub trait MacProtocol {
    /// Schedules the protocol's initial events; modes start as Idle.
    fn start(&mut self, core: &mut SimCore);
    /// Fresh traffic arrives at its source node.
    fn on_packet(&mut self, core: &mut SimCore, node: usize, packet: Packet);
    /// Slot, timer and backoff events.
    fn on_event(&mut self, core: &mut SimCore, ev: Event);
    /// A frame just became audible at `listener` (in Idle or Rx mode).
    fn on_frame_start(&mut self, core: &mut SimCore, listener: usize, record: usize);
    /// A frame a listener was locked onto resolved with `outcome`. The
    /// engine has already cleared the lock; the handler sets the next mode.
    fn on_reception(&mut self, core: &mut SimCore, rx: usize, record: usize, outcome: Reception);
    /// The node's own transmission left the air; the handler sets the next
    /// mode.
    fn on_tx_complete(&mut self, core: &mut SimCore, record: usize);
    /// Called once after the last processed event, before ledgers close.
    fn finish(&mut self, core: &mut SimCore);
    /// Packets currently held in queues (for conservation checks).
    fn queued_packets(&self) -> u64;
}

/// Result of a run.
pub struct RunOutput {
    pub report: SummaryReport,
    pub trace: Option<EventTrace>,
    /// Node placement used by the run, index = node id.
    pub positions: Vec<Position>,
    /// Block of each node.
    pub blocks: Vec<BlockId>,
}

/// Runs a scenario end to end: places nodes, computes routes, draws traffic
/// flows and hands control to the event loop.
pub fn run(cfg: &ScenarioConfig) -> Result<RunOutput, ConfigError> {
    cfg.validate()?;
    let mut rng = ChaCha12Rng::seed_from_u64(cfg.seed);
    let positions: Vec<Position> = (0..cfg.n_nodes)
        .map(|_| {
            let x = rng.gen_range(0.0..cfg.area_width);
            let y = rng.gen_range(0.0..cfg.area_height);
            Position::new(x, y)
        })
        .collect();
    run_placed(cfg, positions, rng, None)
}

/// Runs a scenario with caller-provided node positions and traffic; used by
/// tests that need exact hand-built topologies.
pub fn run_custom(
    cfg: &ScenarioConfig,
    positions: Vec<Position>,
    traffic: TrafficSpec,
) -> Result<RunOutput, ConfigError> {
    cfg.validate()?;
    if positions.len() != cfg.n_nodes {
        return Err(ConfigError::Invalid {
            issues: vec![format!(
                "n_nodes: {} positions provided for {} nodes",
                positions.len(),
                cfg.n_nodes
            )],
        });
    }
    let rng = ChaCha12Rng::seed_from_u64(cfg.seed);
    run_placed(cfg, positions, rng, Some(traffic))
}

fn run_placed(
    cfg: &ScenarioConfig,
    positions: Vec<Position>,
    mut rng: ChaCha12Rng,
    traffic: Option<TrafficSpec>,
) -> Result<RunOutput, ConfigError> {
    let grid = BlockGrid::covering(cfg.area_width, cfg.area_height, cfg.block_side)
        .map_err(|e| ConfigError::Invalid { issues: vec![e.to_string()] })?;
    let blocks: Vec<BlockId> = positions
        .iter()
        .map(|p| grid.block_of(*p))
        .collect::<Result<_, _>>()
        .map_err(|e| ConfigError::Invalid { issues: vec![e.to_string()] })?;

    let conn = crate::geometry::Connectivity::build(&positions, cfg.range);
    let routes = RoutingTable::compute(&conn);
    let traffic = traffic.unwrap_or_else(|| {
        TrafficSpec::random_flows(
            cfg.flow_count(),
            cfg.n_nodes,
            cfg.traffic_rate,
            |a, b| routes.reachable(a, b),
            &mut rng,
        )
    });

    let mut protocol: Box<dyn MacProtocol> = match cfg.protocol {
        Protocol::Lmac => Box::new(LmacProtocol::new(cfg, grid, routes, &blocks)),
        Protocol::Csma => Box::new(CsmaProtocol::new(cfg, routes)),
        Protocol::DutyCycle => Box::new(DutyCycleProtocol::new(cfg, routes)),
    };

    let mut core = SimCore::new(cfg, positions, blocks, rng);
    let mut gen = TrafficState::new(traffic, cfg.packet_size);
    gen.schedule_initial(&mut core);
    protocol.start(&mut core);

    let mut spin_guard: (f64, u64) = (-1.0, 0);
    while let Some(ev) = core.queue.pop() {
        if ev.time >= core.params.sim_time {
            break;
        }
        if ev.time == spin_guard.0 {
            spin_guard.1 += 1;
            if spin_guard.1 > 100_000 {
                panic!("event loop spinning at t={} on {:?}", ev.time, ev.kind);
            }
        } else {
            spin_guard = (ev.time, 0);
        }
        core.time = ev.time;
        core.trace_begin(&ev);
        match ev.kind {
            EventKind::TxStart { record } => {
                // Notify every in-range node that can currently hear.
                for listener in 0..core.n_nodes() {
                    if listener == core.channel.record(record).tx_node {
                        continue;
                    }
                    if !matches!(core.mode(listener), Mode::Idle | Mode::Rx) {
                        continue;
                    }
                    if core.channel.audible(record, listener, &core.positions) {
                        protocol.on_frame_start(&mut core, listener, record);
                    }
                }
            }
            EventKind::TxEnd { record } => {
                core.channel.finish(record);
                // Resolve every listener locked onto this frame (the
                // unicast destination in practice).
                for rx in 0..core.n_nodes() {
                    if core.locked[rx] != Some(record) {
                        continue;
                    }
                    let outcome = core.channel.resolve_reception(
                        record,
                        rx,
                        &core.positions,
                        core.modes[rx],
                        core.listening_since[rx],
                    );
                    core.locked[rx] = None;
                    if outcome == Reception::Collided {
                        core.report.collisions += 1;
                    }
                    let detail = format!("outcome={outcome}@{rx}");
                    core.trace_detail(&detail);
                    protocol.on_reception(&mut core, rx, record, outcome);
                }
                protocol.on_tx_complete(&mut core, record);
            }
            EventKind::PacketGeneration { flow } => {
                if let Some(packet) = gen.generate(&mut core, flow) {
                    let detail =
                        format!("packet={} src={} dst={}", packet.id, packet.src, packet.dst);
                    core.trace_detail(&detail);
                    let node = packet.src;
                    core.report.generated += 1;
                    protocol.on_packet(&mut core, node, packet);
                }
            }
            _ => protocol.on_event(&mut core, ev),
        }
        core.trace_end();
    }

    core.time = core.params.sim_time;
    protocol.finish(&mut core);

    // Close every node's ledger at sim_time.
    for node in 0..core.n_nodes() {
        core.ledger.record_mode(node, core.modes[node], core.mode_since[node], core.params.sim_time);
    }

    // Packet conservation: everything generated is delivered, dropped or
    // still queued somewhere.
    let queued = protocol.queued_packets();
    let delivered = core.report.delivered();
    if core.report.generated != delivered + core.report.dropped + queued {
        core.report.violations.push(format!(
            "packet conservation broken: generated={} delivered={} dropped={} queued={}",
            core.report.generated, delivered, core.report.dropped, queued
        ));
    }

    let trace = if cfg.trace {
        Some(EventTrace {
            initial_modes: vec![Mode::Idle; core.n_nodes()],
            records: std::mem::take(&mut core.trace_records),
        })
    } else {
        None
    };
    let report = core.report.finalize(&core.ledger);
    Ok(RunOutput { report, trace, positions: core.positions, blocks: core.blocks })
}

/// Traffic generation state inside the event loop.
struct TrafficState {
    spec: TrafficSpec,
    packet_bytes: u32,
    next_packet_id: u64,
}

impl TrafficState {
    fn new(spec: TrafficSpec, packet_bytes: u32) -> Self {
        Self { spec, packet_bytes, next_packet_id: 0 }
    }

    fn schedule_initial(&self, core: &mut SimCore) {
        match &self.spec {
            TrafficSpec::Poisson { flows } => {
                let starts: Vec<(usize, f64)> = flows
                    .iter()
                    .enumerate()
                    .filter(|(_, f)| f.rate > 0.0)
                    .map(|(i, f)| {
                        let u: f64 = core.rng.gen();
                        (i, traffic::exp_interarrival(f.rate, u))
                    })
                    .collect();
                for (i, t) in starts {
                    core.queue.push(t, EventKind::PacketGeneration { flow: i });
                }
            }
            TrafficSpec::Injected { arrivals } => {
                for (i, (t, _, _)) in arrivals.iter().enumerate() {
                    core.queue.push(*t, EventKind::PacketGeneration { flow: i });
                }
            }
        }
    }

    /// Produces the packet for a generation event and, for Poisson flows,
    /// schedules the next arrival.
    fn generate(&mut self, core: &mut SimCore, flow: usize) -> Option<Packet> {
        let (src, dst) = match &self.spec {
            TrafficSpec::Poisson { flows } => {
                let f = flows[flow];
                let u: f64 = core.rng.gen();
                let next = core.time + traffic::exp_interarrival(f.rate, u);
                core.queue.push(next, EventKind::PacketGeneration { flow });
                (f.src, f.dst)
            }
            TrafficSpec::Injected { arrivals } => {
                let (_, src, dst) = arrivals[flow];
                (src, dst)
            }
        };
        let packet = Packet {
            id: self.next_packet_id,
            src,
            dst,
            generated_at: core.time,
            size_bytes: self.packet_bytes,
            hops: vec![src],
        };
        self.next_packet_id += 1;
        Some(packet)
    }
}
