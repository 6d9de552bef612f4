//! Command implementations and CSV emission for the simulator CLI.
//!
//! Three commands cover the experiment surface:
//! - `run`: one simulation, one summary CSV row, optional event trace file;
//! - `verify-schedule`: interference check of the slot assignment for the
//!   configured grid and range, violations as CSV;
//! - `sweep`: a grid of runs over one varied key, protocols and seeds.
//!
//! All CSV is comma separated with a fixed header, decimal points and no
//! locale formatting; floats print in Rust's shortest round-trip form.

use std::fmt::Write as _;

use lmac_core::config::{Protocol, ScenarioConfig};
use lmac_core::engine::{run, RunOutput};
use lmac_core::metrics::SummaryReport;
use lmac_core::schedule::{verify_schedule, SlotSchedule, Violation};
use lmac_core::BlockGrid;

pub const SUMMARY_HEADER: &str = "protocol,seed,n_nodes,rate,energy_total_J,energy_per_delivered_J,\
                                  delivered,generated,dropped,collisions,delay_mean_s,delay_p95_s,\
                                  delay_max_s,awake_fraction_mean";

pub const VIOLATION_HEADER: &str =
    "kind,blockA_row,blockA_col,blockB_row,blockB_col,witness_m,required_m";

/// Errors surfaced to the command line.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Io(String),
    Usage(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "{msg}"),
            CliError::Io(msg) => write!(f, "{msg}"),
            CliError::Usage(msg) => write!(f, "{msg}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<lmac_core::ConfigError> for CliError {
    fn from(e: lmac_core::ConfigError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// One summary CSV row in the fixed column order.
pub fn summary_row(cfg: &ScenarioConfig, report: &SummaryReport) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
        cfg.protocol.name(),
        cfg.seed,
        cfg.n_nodes,
        cfg.traffic_rate,
        report.total_energy,
        opt(report.energy_per_delivered),
        report.delivered,
        report.generated,
        report.dropped,
        report.collisions,
        opt(report.delay.map(|d| d.mean)),
        opt(report.delay.map(|d| d.p95)),
        opt(report.delay.map(|d| d.max)),
        report.awake_fraction_mean(),
    )
}

/// Clean the multi-line header constant into the actual CSV line.
pub fn summary_header() -> String {
    SUMMARY_HEADER.split_whitespace().collect()
}

pub fn violation_row(v: &Violation) -> String {
    format!(
        "{},{},{},{},{},{},{}",
        v.kind, v.blocks.0.row, v.blocks.0.col, v.blocks.1.row, v.blocks.1.col, v.witness, v.required
    )
}

/// Loads and parses a configuration file.
pub fn load_config(path: &str) -> Result<ScenarioConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("cannot read '{path}': {e}")))?;
    Ok(ScenarioConfig::parse(&text)?)
}

/// Output of the `run` command: the CSV text, the trace text when enabled,
/// and any warnings to surface on stderr.
pub struct RunArtifacts {
    pub csv: String,
    pub trace_text: Option<String>,
    pub warnings: Vec<String>,
}

pub fn run_command(cfg: &ScenarioConfig) -> Result<RunArtifacts, CliError> {
    let RunOutput { report, trace, .. } = run(cfg)?;
    let mut csv = summary_header();
    csv.push('\n');
    csv.push_str(&summary_row(cfg, &report));
    csv.push('\n');
    let mut warnings = report.warnings.clone();
    warnings.extend(report.violations.iter().map(|v| format!("invariant violated: {v}")));
    Ok(RunArtifacts { csv, trace_text: trace.map(|t| t.to_text()), warnings })
}

/// Output of `verify-schedule`: the CSV text and whether the schedule is
/// interference-free.
pub fn verify_schedule_command(cfg: &ScenarioConfig) -> Result<(String, bool), CliError> {
    let grid = BlockGrid::covering(cfg.area_width, cfg.area_height, cfg.block_side)
        .map_err(|e| CliError::Config(e.to_string()))?;
    let sched = SlotSchedule::build(&grid, cfg.slot_duration);
    let violations = verify_schedule(&grid, &sched, cfg.range);
    let mut out = String::from(VIOLATION_HEADER);
    out.push('\n');
    for v in &violations {
        out.push_str(&violation_row(v));
        out.push('\n');
    }
    Ok((out, violations.is_empty()))
}

/// Keys `sweep` may vary.
pub const SWEEPABLE_KEYS: [&str; 4] = ["traffic_rate", "theta", "n_nodes", "duty_cycle"];

fn apply_sweep_value(cfg: &mut ScenarioConfig, key: &str, value: f64) -> Result<(), CliError> {
    match key {
        "traffic_rate" => cfg.traffic_rate = value,
        "theta" => cfg.theta = value,
        "n_nodes" => {
            if value < 2.0 || value.fract() != 0.0 {
                return Err(CliError::Usage(format!("n_nodes value {value} is not a whole count")));
            }
            cfg.n_nodes = value as usize;
        }
        "duty_cycle" => {
            if !(value > 0.0 && value < 1.0) {
                return Err(CliError::Usage(format!("duty_cycle value {value} outside (0, 1)")));
            }
            let period = cfg.duty_listen + cfg.duty_sleep;
            cfg.duty_listen = value * period;
            cfg.duty_sleep = period - cfg.duty_listen;
        }
        other => {
            return Err(CliError::Usage(format!(
                "'{other}' is not sweepable; choose one of {SWEEPABLE_KEYS:?}"
            )))
        }
    }
    Ok(())
}

/// Runs the full (value, protocol, seed) grid and emits one CSV table.
/// Rows appear in deterministic nested order regardless of runtimes.
pub fn sweep_command(
    base: &ScenarioConfig,
    key: &str,
    values: &[f64],
    protocols: &[Protocol],
    seeds: u64,
) -> Result<String, CliError> {
    if values.is_empty() {
        return Err(CliError::Usage("sweep needs at least one value".into()));
    }
    if seeds == 0 {
        return Err(CliError::Usage("sweep needs at least one seed".into()));
    }
    if !SWEEPABLE_KEYS.contains(&key) {
        return Err(CliError::Usage(format!(
            "'{key}' is not sweepable; choose one of {SWEEPABLE_KEYS:?}"
        )));
    }
    let mut out = format!("vary,value,{}\n", summary_header());
    for &value in values {
        for &protocol in protocols {
            for seed_offset in 0..seeds {
                let mut cfg = base.clone();
                cfg.protocol = protocol;
                cfg.seed = base.seed + seed_offset;
                apply_sweep_value(&mut cfg, key, value)?;
                let RunOutput { report, .. } = run(&cfg)?;
                let _ = writeln!(out, "{key},{value},{}", summary_row(&cfg, &report));
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_has_fixed_column_order() {
        assert_eq!(
            summary_header(),
            "protocol,seed,n_nodes,rate,energy_total_J,energy_per_delivered_J,delivered,\
             generated,dropped,collisions,delay_mean_s,delay_p95_s,delay_max_s,awake_fraction_mean"
        );
    }

    #[test]
    fn absent_delay_fields_stay_empty() {
        let cfg = ScenarioConfig::default();
        let ledger = lmac_core::metrics::EnergyLedger::new(2, cfg.powers);
        let report = lmac_core::metrics::ReportBuilder::new().finalize(&ledger);
        let row = summary_row(&cfg, &report);
        assert!(row.contains(",,"), "empty fields should stay empty: {row}");
        assert_eq!(row.split(',').count(), 14);
    }

    #[test]
    fn sweep_rejects_unknown_keys_and_empty_values() {
        let cfg = ScenarioConfig::default();
        assert!(sweep_command(&cfg, "range", &[1.0], &[Protocol::Lmac], 1).is_err());
        assert!(sweep_command(&cfg, "theta", &[], &[Protocol::Lmac], 1).is_err());
    }
}
