use std::process::ExitCode;

use clap::{Parser, Subcommand};

use lmac_cli::{load_config, run_command, sweep_command, verify_schedule_command, CliError};
use lmac_core::config::Protocol;

#[derive(Parser)]
#[command(name = "lmacsim", about = "Wireless sensor network MAC protocol simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one simulation and emit a summary CSV row.
    Run {
        /// Scenario configuration file (key = value lines).
        config: String,
        /// Write the CSV here instead of stdout.
        #[arg(long)]
        out: Option<String>,
        /// Enable the per-event trace regardless of the config file.
        #[arg(long)]
        trace: bool,
        /// Trace output path (default trace.out when tracing is on).
        #[arg(long)]
        trace_out: Option<String>,
    },
    /// Check the slot assignment for reuse interference; exit 0 iff clean.
    VerifySchedule {
        config: String,
        #[arg(long)]
        out: Option<String>,
    },
    /// Run a (value, protocol, seed) grid over one sweepable key.
    Sweep {
        config: String,
        /// Key to vary: traffic_rate, theta, n_nodes or duty_cycle.
        #[arg(long)]
        vary: String,
        /// Comma-separated list of values.
        #[arg(long, value_delimiter = ',')]
        values: Vec<f64>,
        /// Number of seeds per point, starting at the config seed.
        #[arg(long, default_value_t = 1)]
        seeds: u64,
        /// Protocols to run (default: the config's protocol).
        #[arg(long, value_delimiter = ',')]
        protocols: Vec<String>,
        #[arg(long)]
        out: Option<String>,
    },
}

fn emit(text: &str, out: &Option<String>) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| CliError::Io(format!("cannot write '{path}': {e}"))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn dispatch(cli: Cli) -> Result<ExitCode, CliError> {
    match cli.command {
        Command::Run { config, out, trace, trace_out } => {
            let mut cfg = load_config(&config)?;
            cfg.trace = cfg.trace || trace;
            let artifacts = run_command(&cfg)?;
            for w in &artifacts.warnings {
                eprintln!("warning: {w}");
            }
            emit(&artifacts.csv, &out)?;
            if let Some(text) = artifacts.trace_text {
                let path = trace_out.unwrap_or_else(|| "trace.out".to_string());
                std::fs::write(&path, text)
                    .map_err(|e| CliError::Io(format!("cannot write '{path}': {e}")))?;
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::VerifySchedule { config, out } => {
            let cfg = load_config(&config)?;
            let (csv, clean) = verify_schedule_command(&cfg)?;
            emit(&csv, &out)?;
            Ok(if clean { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
        Command::Sweep { config, vary, values, seeds, protocols, out } => {
            let cfg = load_config(&config)?;
            let protocols: Vec<Protocol> = if protocols.is_empty() {
                vec![cfg.protocol]
            } else {
                protocols
                    .iter()
                    .map(|p| p.parse::<Protocol>().map_err(CliError::Usage))
                    .collect::<Result<_, _>>()?
            };
            let csv = sweep_command(&cfg, &vary, &values, &protocols, seeds)?;
            emit(&csv, &out)?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
