//! Scenario configuration: a line-oriented `key = value` format with typed
//! validation.
//!
//! Grammar: one `key = value` pair per line; blank lines and lines starting
//! with `#` are ignored; keys and values are trimmed. Every violated key is
//! reported, not just the first.

use std::str::FromStr;

use thiserror::Error;

use crate::metrics::Powers;

/// Which MAC protocol a run simulates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Protocol {
    Lmac,
    Csma,
    DutyCycle,
}

impl Protocol {
    pub fn name(self) -> &'static str {
        match self {
            Protocol::Lmac => "lmac",
            Protocol::Csma => "csma",
            Protocol::DutyCycle => "dutycycle",
        }
    }
}

impl FromStr for Protocol {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "lmac" => Ok(Protocol::Lmac),
            "csma" => Ok(Protocol::Csma),
            "dutycycle" => Ok(Protocol::DutyCycle),
            other => Err(format!("unknown protocol '{other}' (expected lmac|csma|dutycycle)")),
        }
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("invalid configuration:\n  {}", issues.join("\n  "))]
    Invalid { issues: Vec<String> },
}

/// Full description of one simulation run.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub area_width: f64,
    pub area_height: f64,
    pub n_nodes: usize,
    pub seed: u64,
    /// Transmission range in meters.
    pub range: f64,
    /// Block side length in meters.
    pub block_side: f64,
    /// Radio bitrate in bits per second.
    pub bitrate: f64,
    /// Data packet size in bytes.
    pub packet_size: u32,
    /// Simulated duration in seconds.
    pub sim_time: f64,
    pub protocol: Protocol,
    pub slot_duration: f64,
    /// Inter-slot listen deadline as a fraction of the slot.
    pub theta: f64,
    /// Contention window bounds, in mini-slots.
    pub cw_min: u32,
    pub cw_max: u32,
    /// Backoff mini-slot duration in seconds.
    pub mini_slot: f64,
    pub retry_limit: u32,
    /// Grant frame size in bytes.
    pub grant_size: u32,
    /// Duty-cycle listen window in seconds.
    pub duty_listen: f64,
    /// Duty-cycle sleep span in seconds.
    pub duty_sleep: f64,
    /// Poisson packet rate per flow, packets per second.
    pub traffic_rate: f64,
    /// Number of random flows; defaults to one per node.
    pub traffic_flows: Option<usize>,
    pub powers: Powers,
    pub trace: bool,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            area_width: 800.0,
            area_height: 800.0,
            n_nodes: 50,
            seed: 1,
            range: 250.0,
            block_side: 200.0,
            bitrate: 250_000.0,
            packet_size: 512,
            sim_time: 500.0,
            protocol: Protocol::Lmac,
            slot_duration: 0.05,
            theta: 0.3,
            cw_min: 8,
            cw_max: 64,
            mini_slot: 0.001,
            retry_limit: 5,
            grant_size: 16,
            duty_listen: 0.065,
            duty_sleep: 0.585,
            traffic_rate: 1.0,
            traffic_flows: None,
            powers: Powers::default(),
            trace: false,
        }
    }
}

impl ScenarioConfig {
    /// Seconds to transmit a data frame.
    pub fn data_duration(&self) -> f64 {
        8.0 * self.packet_size as f64 / self.bitrate
    }

    /// Seconds to transmit a grant frame.
    pub fn grant_duration(&self) -> f64 {
        8.0 * self.grant_size as f64 / self.bitrate
    }

    /// Number of traffic flows this scenario uses.
    pub fn flow_count(&self) -> usize {
        self.traffic_flows.unwrap_or(self.n_nodes)
    }

    /// Parses the `key = value` format, collecting every problem found.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = ScenarioConfig::default();
        let mut issues = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                issues.push(format!("line {}: expected 'key = value', got '{line}'", lineno + 1));
                continue;
            };
            let key = key.trim();
            let value = value.trim();
            if let Err(msg) = cfg.set(key, value) {
                issues.push(format!("line {}: {msg}", lineno + 1));
            }
        }
        if !issues.is_empty() {
            return Err(ConfigError::Invalid { issues });
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Sets one key from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        fn num<T: FromStr>(key: &str, value: &str) -> Result<T, String> {
            value
                .parse::<T>()
                .map_err(|_| format!("key '{key}': cannot parse '{value}'"))
        }
        match key {
            "area_width" => self.area_width = num(key, value)?,
            "area_height" => self.area_height = num(key, value)?,
            "n_nodes" => self.n_nodes = num(key, value)?,
            "seed" => self.seed = num(key, value)?,
            "range" => self.range = num(key, value)?,
            "block_side" => self.block_side = num(key, value)?,
            "bitrate" => self.bitrate = num(key, value)?,
            "packet_size" => self.packet_size = num(key, value)?,
            "sim_time" => self.sim_time = num(key, value)?,
            "protocol" => self.protocol = value.parse()?,
            "slot_duration" => self.slot_duration = num(key, value)?,
            "theta" => self.theta = num(key, value)?,
            "cw_min" => self.cw_min = num(key, value)?,
            "cw_max" => self.cw_max = num(key, value)?,
            "mini_slot" => self.mini_slot = num(key, value)?,
            "retry_limit" => self.retry_limit = num(key, value)?,
            "grant_size" => self.grant_size = num(key, value)?,
            "duty_listen" => self.duty_listen = num(key, value)?,
            "duty_sleep" => self.duty_sleep = num(key, value)?,
            "traffic_rate" => self.traffic_rate = num(key, value)?,
            "traffic_flows" => self.traffic_flows = Some(num(key, value)?),
            "p_sleep" => self.powers.sleep = num(key, value)?,
            "p_idle" => self.powers.idle = num(key, value)?,
            "p_tx" => self.powers.tx = num(key, value)?,
            "p_rx" => self.powers.rx = num(key, value)?,
            "trace" => {
                self.trace = match value {
                    "on" => true,
                    "off" => false,
                    other => return Err(format!("key 'trace': expected on|off, got '{other}'")),
                }
            }
            other => return Err(format!("unknown key '{other}'")),
        }
        Ok(())
    }

    /// Emits the configuration in the same `key = value` format it parses.
    pub fn emit(&self) -> String {
        let mut out = String::new();
        let mut line = |k: &str, v: String| out.push_str(&format!("{k} = {v}\n"));
        line("area_width", self.area_width.to_string());
        line("area_height", self.area_height.to_string());
        line("n_nodes", self.n_nodes.to_string());
        line("seed", self.seed.to_string());
        line("range", self.range.to_string());
        line("block_side", self.block_side.to_string());
        line("bitrate", self.bitrate.to_string());
        line("packet_size", self.packet_size.to_string());
        line("sim_time", self.sim_time.to_string());
        line("protocol", self.protocol.name().to_string());
        line("slot_duration", self.slot_duration.to_string());
        line("theta", self.theta.to_string());
        line("cw_min", self.cw_min.to_string());
        line("cw_max", self.cw_max.to_string());
        line("mini_slot", self.mini_slot.to_string());
        line("retry_limit", self.retry_limit.to_string());
        line("grant_size", self.grant_size.to_string());
        line("duty_listen", self.duty_listen.to_string());
        line("duty_sleep", self.duty_sleep.to_string());
        line("traffic_rate", self.traffic_rate.to_string());
        if let Some(f) = self.traffic_flows {
            line("traffic_flows", f.to_string());
        }
        line("p_sleep", self.powers.sleep.to_string());
        line("p_idle", self.powers.idle.to_string());
        line("p_tx", self.powers.tx.to_string());
        line("p_rx", self.powers.rx.to_string());
        line("trace", if self.trace { "on" } else { "off" }.to_string());
        out
    }

    /// Validates every constraint at once and reports all violations.
    pub fn validate(&self) -> Result<(), ConfigError> {
        fn positive(x: f64) -> bool {
            x.is_finite() && x > 0.0
        }
        let mut issues = Vec::new();
        if !positive(self.area_width) || !positive(self.area_height) {
            issues.push(format!(
                "area_width/area_height: must be positive (got {} x {})",
                self.area_width, self.area_height
            ));
        }
        if self.n_nodes < 2 {
            issues.push(format!("n_nodes: need at least 2 nodes (got {})", self.n_nodes));
        }
        if !positive(self.range) {
            issues.push(format!("range: must be positive (got {})", self.range));
        }
        if !positive(self.block_side) {
            issues.push(format!("block_side: must be positive (got {})", self.block_side));
        }
        if !positive(self.bitrate) {
            issues.push(format!("bitrate: must be positive (got {})", self.bitrate));
        }
        if self.packet_size == 0 {
            issues.push("packet_size: must be positive".into());
        }
        if self.grant_size == 0 {
            issues.push("grant_size: must be positive".into());
        }
        if !positive(self.sim_time) {
            issues.push(format!("sim_time: must be positive (got {})", self.sim_time));
        }
        if !(self.theta > 0.0 && self.theta < 1.0) {
            // NaN also lands here.
            issues.push(format!("theta: must lie strictly in (0, 1) (got {})", self.theta));
        }
        if self.cw_min == 0 {
            issues.push("cw_min: must be at least 1".into());
        }
        if self.cw_max < self.cw_min {
            issues.push(format!(
                "cw_max: must be >= cw_min (got {} < {})",
                self.cw_max, self.cw_min
            ));
        }
        if !positive(self.mini_slot) {
            issues.push(format!("mini_slot: must be positive (got {})", self.mini_slot));
        }
        if !(self.traffic_rate.is_finite() && self.traffic_rate >= 0.0) {
            issues.push(format!("traffic_rate: must be non-negative (got {})", self.traffic_rate));
        }
        if !positive(self.slot_duration) {
            issues.push(format!("slot_duration: must be positive (got {})", self.slot_duration));
        }
        let exchange = self.data_duration() + self.grant_duration() + self.mini_slot;
        if self.protocol == Protocol::Lmac && self.slot_duration > 0.0 && exchange > self.slot_duration
        {
            issues.push(format!(
                "slot_duration: one data+grant exchange needs {exchange:.6} s, slot is only {} s",
                self.slot_duration
            ));
        }
        if self.protocol == Protocol::DutyCycle {
            if !positive(self.duty_listen) || !positive(self.duty_sleep) {
                issues.push(format!(
                    "duty_listen/duty_sleep: must be positive (got {} / {})",
                    self.duty_listen, self.duty_sleep
                ));
            } else if exchange > self.duty_listen {
                issues.push(format!(
                    "duty_listen: one data+grant exchange needs {exchange:.6} s, window is only {} s",
                    self.duty_listen
                ));
            }
        }
        for (name, p) in [
            ("p_sleep", self.powers.sleep),
            ("p_idle", self.powers.idle),
            ("p_tx", self.powers.tx),
            ("p_rx", self.powers.rx),
        ] {
            if !(p.is_finite() && p >= 0.0) {
                issues.push(format!("{name}: must be non-negative (got {p})"));
            }
        }
        if issues.is_empty() {
            Ok(())
        } else {
            Err(ConfigError::Invalid { issues })
        }
    }
}
