//! Optional per-event trace: one record per processed event, carrying the
//! radio-mode transitions the event caused.
//!
//! The text form is line oriented with a stable field order
//! `time,seq,kind,subject,detail`; the detail field is the remainder of the
//! line. An `init` line precedes all events and lists the initial mode of
//! every node so that a replay can reconstruct mode intervals without
//! knowing anything about the protocols.

use crate::metrics::Mode;

/// One processed event.
#[derive(Debug, Clone)]
pub struct TraceRecord {
    pub time: f64,
    pub seq: u64,
    pub kind: String,
    pub subject: String,
    pub detail: String,
    /// Mode transitions performed while handling this event, in order:
    /// (node, from, to).
    pub mode_changes: Vec<(usize, Mode, Mode)>,
}

/// The full event trace of a run.
#[derive(Debug, Clone)]
pub struct EventTrace {
    pub initial_modes: Vec<Mode>,
    pub records: Vec<TraceRecord>,
}

impl EventTrace {
    /// Serializes to the line-oriented text format.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str("0.000000000,0,init,-,modes=");
        for (i, m) in self.initial_modes.iter().enumerate() {
            if i > 0 {
                out.push(';');
            }
            out.push_str(&format!("n{i}:{m}"));
        }
        out.push('\n');
        for r in &self.records {
            out.push_str(&format!(
                "{:.9},{},{},{},{}",
                r.time, r.seq, r.kind, r.subject, r.detail
            ));
            if !r.mode_changes.is_empty() {
                if !r.detail.is_empty() {
                    out.push(' ');
                }
                out.push_str("modes=");
                for (i, (n, from, to)) in r.mode_changes.iter().enumerate() {
                    if i > 0 {
                        out.push(';');
                    }
                    out.push_str(&format!("n{n}:{from}>{to}"));
                }
            }
            out.push('\n');
        }
        out
    }

    /// Independent energy integration: replays the mode transitions and sums
    /// duration x power per node, closing every node at `end_time`.
    pub fn replay_energy(&self, powers: &crate::metrics::Powers, end_time: f64) -> Vec<f64> {
        let n = self.initial_modes.len();
        let mut mode = self.initial_modes.clone();
        let mut since = vec![0.0f64; n];
        let mut energy = vec![0.0f64; n];
        for r in &self.records {
            for &(node, from, to) in &r.mode_changes {
                assert_eq!(mode[node], from, "trace replay out of sync at node {node}");
                energy[node] += powers.of(from) * (r.time - since[node]);
                mode[node] = to;
                since[node] = r.time;
            }
        }
        for node in 0..n {
            energy[node] += powers.of(mode[node]) * (end_time - since[node]);
        }
        energy
    }
}
