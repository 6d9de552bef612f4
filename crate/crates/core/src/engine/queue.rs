//! The future event list: a priority queue ordered by (time, seq).
//!
//! The sequence number is assigned at push time and breaks ties between
//! events scheduled for the same instant, which pins the processing order
//! and with it the whole simulation down to the last random draw.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::geometry::BlockId;

/// Tags for protocol-defined timers carried by `TimerGeneric` events.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimerTag {
    /// Sender-side wait for the grant answering a data frame.
    GrantTimeout { generation: u64 },
    /// Start of a duty-cycle listen window.
    WindowStart,
    /// End of a duty-cycle listen window.
    WindowEnd,
}

/// What a scheduled event does when it fires.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EventKind {
    /// A superframe slot begins (1-based layout index).
    SlotStart { slot: usize },
    /// A superframe slot ends.
    SlotEnd { slot: usize },
    /// A registered transmission becomes audible.
    TxStart { record: usize },
    /// A registered transmission leaves the air.
    TxEnd { record: usize },
    /// A node's contention backoff expires. The generation counter
    /// invalidates expiries whose contention was abandoned meanwhile.
    BackoffExpiry { node: usize, generation: u64 },
    /// A block's inter-slot listen deadline.
    ThetaTimeout { block: BlockId },
    /// The next packet arrival of a traffic flow.
    PacketGeneration { flow: usize },
    /// Protocol-defined timer.
    TimerGeneric { node: usize, tag: TimerTag },
}

/// A scheduled event.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    pub time: f64,
    pub seq: u64,
    pub kind: EventKind,
}

impl Eq for Event {}

impl Ord for Event {
    fn cmp(&self, other: &Self) -> Ordering {
        // Event times are finite by construction.
        self.time
            .partial_cmp(&other.time)
            .expect("non-finite event time")
            .then_with(|| self.seq.cmp(&other.seq))
    }
}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Min-queue of events in (time, seq) order.
#[derive(Debug, Default)]
pub struct EventQueue {
    heap: BinaryHeap<std::cmp::Reverse<Event>>,
    next_seq: u64,
    last_popped: f64,
}

impl EventQueue {
    pub fn new() -> Self {
        Self { heap: BinaryHeap::new(), next_seq: 0, last_popped: 0.0 }
    }

    /// Schedules `kind` at absolute time `time` and returns the assigned
    /// sequence number.
    pub fn push(&mut self, time: f64, kind: EventKind) -> u64 {
        assert!(time.is_finite(), "event time must be finite");
        assert!(
            time >= self.last_popped,
            "event at {time} scheduled in the past (now {})",
            self.last_popped
        );
        let seq = self.next_seq;
        self.next_seq += 1;
        self.heap.push(std::cmp::Reverse(Event { time, seq, kind }));
        seq
    }

    /// Removes and returns the earliest event; `None` once the simulation
    /// has run out of work.
    pub fn pop(&mut self) -> Option<Event> {
        let ev = self.heap.pop().map(|r| r.0);
        if let Some(e) = &ev {
            debug_assert!(e.time >= self.last_popped);
            self.last_popped = e.time;
        }
        ev
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }
}
