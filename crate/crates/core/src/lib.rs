//! Discrete-event simulator for a location-aware sensor-network MAC
//! protocol with block-based slot scheduling and spatial reuse, plus two
//! baseline MACs (always-on CSMA/CA and synchronized duty cycling) and the
//! energy/delay metrics to compare them.
//!
//! The crate splits along the natural seams of the problem:
//!
//! - [`geometry`]: block grid, node-to-block mapping, unit-disk
//!   connectivity;
//! - [`schedule`]: inter-/intra-block slot assignment, the superframe, and
//!   an exhaustive interference verifier;
//! - [`engine`]: deterministic event loop, radio channel, traffic, traces;
//! - [`lmac`]: the location-aware protocol state machine and routing;
//! - [`baselines`]: the two comparison protocols;
//! - [`metrics`]: mode-time accounting, energy, delays, the summary report;
//! - [`config`]: the `key = value` scenario format and validation.
//!
//! Runs are reproducible: one seeded random stream drives placement,
//! traffic and backoff, consumed in event order.

pub mod baselines;
pub mod config;
pub mod engine;
pub mod geometry;
pub mod lmac;
pub mod metrics;
pub mod schedule;

pub use config::{ConfigError, Protocol, ScenarioConfig};
pub use engine::{run, run_custom, EventTrace, Packet, RunOutput, TrafficSpec};
pub use geometry::{BlockGrid, BlockId, Position};
pub use metrics::{Mode, Powers, SummaryReport};
pub use schedule::{SlotSchedule, SuperframeLayout, Violation, ViolationKind};
