//! The shared radio channel: transmission records, carrier sensing and
//! reception resolution under the unit-disk, no-capture model.
//!
//! A transmission is audible at a node iff the transmitter is strictly
//! closer than the range. A frame is received only if the listener was in a
//! listening-capable mode (Idle or Rx) for its entire on-air interval and no
//! other audible transmission overlapped it for any positive duration; any
//! overlap corrupts both frames (no capture).

use crate::geometry::Position;
use crate::metrics::Mode;

/// What a frame carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrameKind {
    Data,
    /// Receiver's response to a data frame; doubles as the link-layer ack.
    Grant,
}

impl std::fmt::Display for FrameKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            FrameKind::Data => write!(f, "Data"),
            FrameKind::Grant => write!(f, "Grant"),
        }
    }
}

/// An on-air unit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Frame {
    pub id: u64,
    pub src: usize,
    pub dst: usize,
    pub kind: FrameKind,
    pub size_bytes: u32,
    /// Id of the packet a data frame carries.
    pub packet: Option<u64>,
}

/// A frame placed on the air for a concrete interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransmissionRecord {
    pub frame: Frame,
    pub tx_node: usize,
    pub start: f64,
    pub end: f64,
}

impl TransmissionRecord {
    pub fn duration(&self) -> f64 {
        self.end - self.start
    }

    fn overlaps(&self, start: f64, end: f64) -> bool {
        self.start < end && self.end > start
    }
}

/// Outcome of a transmission at one potential receiver.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Reception {
    Delivered,
    Collided,
    Inaudible,
}

impl std::fmt::Display for Reception {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Reception::Delivered => write!(f, "Delivered"),
            Reception::Collided => write!(f, "Collided"),
            Reception::Inaudible => write!(f, "Inaudible"),
        }
    }
}

/// The radio medium. Keeps every transmission of the run in start order;
/// overlap queries scan only the window that can possibly overlap.
#[derive(Debug)]
pub struct Channel {
    pub range: f64,
    records: Vec<TransmissionRecord>,
    active: Vec<usize>,
    /// Longest frame duration seen; bounds the overlap scan window.
    max_duration: f64,
}

impl Channel {
    pub fn new(range: f64) -> Self {
        Self { range, records: Vec::new(), active: Vec::new(), max_duration: 0.0 }
    }

    pub fn record(&self, id: usize) -> &TransmissionRecord {
        &self.records[id]
    }

    pub fn records(&self) -> &[TransmissionRecord] {
        &self.records
    }

    /// Registers a transmission starting now. Records must be registered in
    /// non-decreasing start order.
    pub fn register(&mut self, record: TransmissionRecord) -> usize {
        if let Some(last) = self.records.last() {
            assert!(record.start >= last.start, "records must arrive in start order");
        }
        assert!(record.end > record.start);
        self.max_duration = self.max_duration.max(record.duration());
        let id = self.records.len();
        self.records.push(record);
        self.active.push(id);
        id
    }

    /// Marks a transmission as finished (no longer on the air).
    pub fn finish(&mut self, id: usize) {
        self.active.retain(|&a| a != id);
    }

    /// True iff `listener` at `pos` senses energy at instant `t`: some other
    /// node's transmission is on the air, started strictly before `t`, and
    /// is audible. Transmissions starting exactly at `t` are not sensed;
    /// carrier sensing cannot see a frame that has not begun.
    pub fn carrier_busy(&self, listener: usize, pos: &[Position], t: f64) -> bool {
        self.active.iter().any(|&id| {
            let r = &self.records[id];
            r.tx_node != listener
                && r.start < t
                && r.end > t
                && pos[r.tx_node].distance(&pos[listener]) < self.range
        })
    }

    /// True iff the transmission is audible at the listener position
    /// (strictly within range).
    pub fn audible(&self, record: usize, listener: usize, pos: &[Position]) -> bool {
        let r = &self.records[record];
        r.tx_node != listener && pos[r.tx_node].distance(&pos[listener]) < self.range
    }

    /// True iff any other transmission audible at `rx` overlaps the record's
    /// interval for a positive duration.
    pub fn has_audible_overlap(&self, record: usize, rx: usize, pos: &[Position]) -> bool {
        let r = self.records[record];
        // Records are in start order; anything starting earlier than
        // start - max_duration has already ended.
        let from = self
            .records
            .partition_point(|c| c.start < r.start - self.max_duration);
        self.records[from..].iter().enumerate().any(|(off, c)| {
            from + off != record
                && c.tx_node != r.tx_node
                && c.overlaps(r.start, r.end)
                && pos[c.tx_node].distance(&pos[rx]) < self.range
        })
    }

    /// Resolves a finished transmission at one potential receiver.
    ///
    /// `listened_from` must be the earliest time since which the receiver
    /// has been continuously in a listening-capable mode (Idle or Rx);
    /// `mode_now` its mode at the record's end.
    pub fn resolve_reception(
        &self,
        record: usize,
        rx: usize,
        pos: &[Position],
        mode_now: Mode,
        listened_from: f64,
    ) -> Reception {
        let r = &self.records[record];
        let listening = matches!(mode_now, Mode::Idle | Mode::Rx) && listened_from <= r.start;
        if !self.audible(record, rx, pos) || !listening {
            return Reception::Inaudible;
        }
        if self.has_audible_overlap(record, rx, pos) {
            return Reception::Collided;
        }
        Reception::Delivered
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frame(id: u64, src: usize, dst: usize) -> Frame {
        Frame { id, src, dst, kind: FrameKind::Data, size_bytes: 512, packet: Some(id) }
    }

    fn record(id: u64, tx: usize, dst: usize, start: f64, end: f64) -> TransmissionRecord {
        TransmissionRecord { frame: frame(id, tx, dst), tx_node: tx, start, end }
    }

    #[test]
    fn single_transmission_delivered() {
        let pos = vec![Position::new(0.0, 0.0), Position::new(100.0, 0.0)];
        let mut ch = Channel::new(250.0);
        let r = ch.register(record(1, 0, 1, 1.0, 1.016384));
        assert_eq!(ch.resolve_reception(r, 1, &pos, Mode::Rx, 0.0), Reception::Delivered);
    }

    #[test]
    fn out_of_range_is_inaudible() {
        let pos = vec![Position::new(0.0, 0.0), Position::new(250.0, 0.0)];
        let mut ch = Channel::new(250.0);
        let r = ch.register(record(1, 0, 1, 1.0, 1.1));
        assert_eq!(ch.resolve_reception(r, 1, &pos, Mode::Idle, 0.0), Reception::Inaudible);
    }

    #[test]
    fn sleeping_listener_is_inaudible() {
        let pos = vec![Position::new(0.0, 0.0), Position::new(100.0, 0.0)];
        let mut ch = Channel::new(250.0);
        let r = ch.register(record(1, 0, 1, 1.0, 1.1));
        assert_eq!(ch.resolve_reception(r, 1, &pos, Mode::Sleep, 0.0), Reception::Inaudible);
        // Woke mid-frame: listening only from 1.05 on.
        assert_eq!(ch.resolve_reception(r, 1, &pos, Mode::Idle, 1.05), Reception::Inaudible);
    }

    #[test]
    fn overlapping_transmissions_collide_both_ways() {
        let pos = vec![
            Position::new(0.0, 0.0),
            Position::new(100.0, 0.0),
            Position::new(50.0, 50.0),
        ];
        let mut ch = Channel::new(250.0);
        let a = ch.register(record(1, 0, 2, 1.0, 1.0164));
        let b = ch.register(record(2, 1, 2, 1.01, 1.0264));
        assert_eq!(ch.resolve_reception(a, 2, &pos, Mode::Rx, 0.0), Reception::Collided);
        assert_eq!(ch.resolve_reception(b, 2, &pos, Mode::Rx, 0.0), Reception::Collided);
    }

    #[test]
    fn collision_outcome_ignores_start_order() {
        // Swapping which of two overlapping frames starts first leaves the
        // no-capture outcome unchanged.
        let pos = vec![
            Position::new(0.0, 0.0),
            Position::new(100.0, 0.0),
            Position::new(50.0, 50.0),
        ];
        for earlier_first in [true, false] {
            let mut ch = Channel::new(250.0);
            let (s0, s1) = if earlier_first { (1.0, 1.01) } else { (1.0, 1.0) };
            let a = ch.register(record(1, 0, 2, s0, s0 + 0.02));
            let b = ch.register(record(2, 1, 2, s1, s1 + 0.02));
            assert_eq!(ch.resolve_reception(a, 2, &pos, Mode::Rx, 0.0), Reception::Collided);
            assert_eq!(ch.resolve_reception(b, 2, &pos, Mode::Rx, 0.0), Reception::Collided);
        }
    }

    #[test]
    fn back_to_back_frames_do_not_overlap() {
        let pos = vec![Position::new(0.0, 0.0), Position::new(100.0, 0.0), Position::new(10.0, 0.0)];
        let mut ch = Channel::new(250.0);
        let a = ch.register(record(1, 0, 1, 1.0, 1.5));
        let b = ch.register(record(2, 2, 1, 1.5, 2.0));
        assert_eq!(ch.resolve_reception(a, 1, &pos, Mode::Rx, 0.0), Reception::Delivered);
        assert_eq!(ch.resolve_reception(b, 1, &pos, Mode::Rx, 0.0), Reception::Delivered);
    }

    #[test]
    fn distant_overlap_does_not_collide() {
        // The interferer is out of range of the receiver: hidden-terminal
        // geometry matters, not mere temporal overlap.
        let pos = vec![
            Position::new(0.0, 0.0),
            Position::new(100.0, 0.0),
            Position::new(900.0, 0.0),
        ];
        let mut ch = Channel::new(250.0);
        let a = ch.register(record(1, 0, 1, 1.0, 1.02));
        let _b = ch.register(record(2, 2, 1, 1.01, 1.03));
        assert_eq!(ch.resolve_reception(a, 1, &pos, Mode::Rx, 0.0), Reception::Delivered);
    }

    #[test]
    fn carrier_sense_rules() {
        let pos = vec![
            Position::new(0.0, 0.0),
            Position::new(100.0, 0.0),
            Position::new(600.0, 0.0),
        ];
        let mut ch = Channel::new(250.0);
        assert!(!ch.carrier_busy(1, &pos, 1.0));
        let a = ch.register(record(1, 0, 1, 1.0, 1.5));
        // A transmission starting exactly now is not sensed.
        assert!(!ch.carrier_busy(1, &pos, 1.0));
        assert!(ch.carrier_busy(1, &pos, 1.2));
        // Out of range: idle for the distant node (hidden terminal).
        assert!(!ch.carrier_busy(2, &pos, 1.2));
        ch.finish(a);
        assert!(!ch.carrier_busy(1, &pos, 1.4));
    }
}
