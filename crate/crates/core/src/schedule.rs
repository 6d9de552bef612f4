//! Slot assignment with spatial reuse, the superframe layout, and an
//! exhaustive interference verifier.
//!
//! Each block owns two slots per superframe: an inter-block slot in which its
//! nodes listen for frames arriving from neighboring blocks, and an
//! intra-block slot in which its nodes exchange frames among themselves under
//! CSMA. Slots are reused across blocks far enough apart that reuse cannot
//! interfere under the unit-disk radio model; `verify_schedule` checks that
//! claim for a concrete grid, schedule and transmission range and reports
//! every offending block pair.

use std::collections::BTreeMap;

use crate::geometry::{BlockGrid, BlockId};

/// Per-block slot assignment. Slot indices are 1-based; inter indices occupy
/// `[1, n_inter]` and intra indices `[n_inter+1, n_inter+n_intra]`.
#[derive(Debug, Clone)]
pub struct SlotSchedule {
    pub n_inter: usize,
    pub n_intra: usize,
    pub inter_slot: BTreeMap<BlockId, usize>,
    pub intra_slot: BTreeMap<BlockId, usize>,
    /// Duration of one slot in seconds.
    pub slot_duration: f64,
}

impl SlotSchedule {
    /// Builds the default schedule for a grid: a 3x3 inter-slot tiling and a
    /// 2x2 intra-slot tiling, intra indices following the inter indices.
    pub fn build(grid: &BlockGrid, slot_duration: f64) -> Self {
        let inter_slot = assign_inter_slots(grid);
        let n_inter = inter_slot.values().copied().max().unwrap_or(0);
        let intra_slot = assign_intra_slots(grid, n_inter);
        let max_intra = intra_slot.values().copied().max().unwrap_or(n_inter);
        Self {
            n_inter,
            n_intra: max_intra - n_inter,
            inter_slot,
            intra_slot,
            slot_duration,
        }
    }

    /// Total number of slots in one superframe.
    pub fn slots_per_frame(&self) -> usize {
        self.n_inter + self.n_intra
    }

    /// Duration of one full superframe in seconds.
    pub fn frame_duration(&self) -> f64 {
        self.slots_per_frame() as f64 * self.slot_duration
    }
}

/// Inter-block slot for each block: `3*(r mod 3) + (c mod 3) + 1`.
///
/// Blocks sharing a slot differ by a multiple of 3 in both row and column,
/// so at least two full blocks separate them along some axis. With the block
/// side no smaller than the transmission range, a sender adjacent to one of
/// them can never reach the other, which is exactly what `verify_schedule`
/// re-checks. Grids of at least 3x3 use all 9 slots.
pub fn assign_inter_slots(grid: &BlockGrid) -> BTreeMap<BlockId, usize> {
    grid.blocks()
        .map(|b| (b, 3 * (b.row % 3) + (b.col % 3) + 1))
        .collect()
}

/// Intra-block slot for each block: `offset + 2*(r mod 2) + (c mod 2) + 1`.
///
/// A 2x2 tiling suffices for the separation property the protocol needs:
/// same-slot blocks are never adjacent, so their closest points lie at least
/// one block side apart. `offset` is the number of inter slots so that the
/// two index ranges stay disjoint.
pub fn assign_intra_slots(grid: &BlockGrid, offset: usize) -> BTreeMap<BlockId, usize> {
    grid.blocks()
        .map(|b| (b, offset + 2 * (b.row % 2) + (b.col % 2) + 1))
        .collect()
}

/// What kind of slot a superframe descriptor is.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlotKind {
    Inter,
    Intra,
}

impl std::fmt::Display for SlotKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SlotKind::Inter => write!(f, "inter"),
            SlotKind::Intra => write!(f, "intra"),
        }
    }
}

/// One slot of the superframe: its 1-based index, kind, and owner blocks
/// (the blocks this slot is assigned to; several under spatial reuse).
#[derive(Debug, Clone, PartialEq)]
pub struct SlotDescriptor {
    pub index: usize,
    pub kind: SlotKind,
    pub owners: Vec<BlockId>,
}

/// The time realization of a slot schedule: slot descriptors in index order,
/// tiling `[0, frame_duration)` and repeating for the whole run.
#[derive(Debug, Clone)]
pub struct SuperframeLayout {
    pub slots: Vec<SlotDescriptor>,
    pub slot_duration: f64,
    pub frame_duration: f64,
}

/// Builds the superframe: inter slots first, then intra slots, in index
/// order. Indices the tilings skip on degenerate grids (fewer than 3 rows or
/// columns) appear as ownerless descriptors so the frame stays contiguous.
pub fn build_superframe(sched: &SlotSchedule) -> SuperframeLayout {
    let total = sched.slots_per_frame();
    let mut slots: Vec<SlotDescriptor> = (1..=total)
        .map(|index| SlotDescriptor {
            index,
            kind: if index <= sched.n_inter { SlotKind::Inter } else { SlotKind::Intra },
            owners: Vec::new(),
        })
        .collect();
    for (&block, &slot) in &sched.inter_slot {
        slots[slot - 1].owners.push(block);
    }
    for (&block, &slot) in &sched.intra_slot {
        slots[slot - 1].owners.push(block);
    }
    SuperframeLayout {
        slots,
        slot_duration: sched.slot_duration,
        frame_duration: sched.frame_duration(),
    }
}

/// A slot occurrence located in absolute time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlotInstant<'a> {
    pub descriptor: &'a SlotDescriptor,
    /// Absolute start time of this occurrence, in seconds.
    pub start: f64,
    /// Absolute end time of this occurrence, in seconds.
    pub end: f64,
    /// How many full superframes precede this occurrence.
    pub frame_index: u64,
}

impl SuperframeLayout {
    /// The slot occurrence containing time `t`. A boundary instant belongs
    /// to the slot that starts there; instants within 1 ns of a boundary
    /// count as the boundary, absorbing float residue between incrementally
    /// accumulated event times and this multiplicative reconstruction.
    pub fn slot_at(&self, t: f64) -> SlotInstant<'_> {
        debug_assert!(t >= 0.0);
        const EPS: f64 = 1e-9;
        let mut frame_index = ((t + EPS) / self.frame_duration).floor() as u64;
        let mut idx = (((t + EPS) - frame_index as f64 * self.frame_duration)
            / self.slot_duration)
            .floor() as i64;
        if idx < 0 {
            idx = 0;
        }
        if idx >= self.slots.len() as i64 {
            frame_index += 1;
            idx = 0;
        }
        let start = frame_index as f64 * self.frame_duration + idx as f64 * self.slot_duration;
        SlotInstant {
            descriptor: &self.slots[idx as usize],
            start,
            end: start + self.slot_duration,
            frame_index,
        }
    }

    /// Start time of occurrence `k` (0-based) of the slot with 1-based
    /// `index`.
    pub fn occurrence_start(&self, index: usize, k: u64) -> f64 {
        k as f64 * self.frame_duration + (index - 1) as f64 * self.slot_duration
    }
}

/// Which reuse rule a schedule violation breaks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ViolationKind {
    InterInter,
    IntraIntra,
}

impl std::fmt::Display for ViolationKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ViolationKind::InterInter => write!(f, "InterInter"),
            ViolationKind::IntraIntra => write!(f, "IntraIntra"),
        }
    }
}

/// A slot-sharing block pair whose reuse can interfere: some point allowed to
/// transmit in the slot lies closer than `required` to some point allowed to
/// receive in it. `witness` is the offending distance.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub kind: ViolationKind,
    pub blocks: (BlockId, BlockId),
    pub witness: f64,
    pub required: f64,
}

/// Exhaustively checks a schedule for reuse interference under the unit-disk
/// model with the given transmission range.
///
/// For every unordered pair of distinct blocks sharing an inter slot, a
/// sender may sit anywhere in a block adjacent to either one while the other
/// hosts a receiver; the check is over block rectangles, independent of any
/// concrete deployment. For every pair sharing an intra slot, sender and
/// receiver both lie inside their own blocks. Each offending pair yields one
/// violation carrying the worst witness distance. An empty result means the
/// schedule is interference-free.
pub fn verify_schedule(grid: &BlockGrid, sched: &SlotSchedule, range: f64) -> Vec<Violation> {
    let blocks: Vec<BlockId> = grid.blocks().collect();
    let mut violations = Vec::new();

    for (i, &a) in blocks.iter().enumerate() {
        for &b in &blocks[i + 1..] {
            if sched.inter_slot.get(&a) == sched.inter_slot.get(&b) {
                let mut worst: Option<f64> = None;
                for (rx, tx_home) in [(b, a), (a, b)] {
                    for sender_block in grid.neighbors(tx_home) {
                        let d = grid.min_block_distance(sender_block, rx);
                        if d < range {
                            worst = Some(worst.map_or(d, |w: f64| w.min(d)));
                        }
                    }
                }
                if let Some(witness) = worst {
                    violations.push(Violation {
                        kind: ViolationKind::InterInter,
                        blocks: (a, b),
                        witness,
                        required: range,
                    });
                }
            }
            if sched.intra_slot.get(&a) == sched.intra_slot.get(&b) {
                let d = grid.min_block_distance(a, b);
                if d < range {
                    violations.push(Violation {
                        kind: ViolationKind::IntraIntra,
                        blocks: (a, b),
                        witness: d,
                        required: range,
                    });
                }
            }
        }
    }
    violations
}
