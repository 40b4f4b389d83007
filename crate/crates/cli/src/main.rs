//! `pruw`: plan storage, simulate sessions and sweep costs for private
//! read-update-write over heterogeneous databases.
//!
//! Exit codes: 0 success, 2 invalid input or infeasible plan, 3 a
//! correctness check failed, 4 I/O error, 5 anything else. Log verbosity is
//! read from `PRUW_LOG` (`error`, `warn`, `info`, `debug`).

mod config;
mod exit;
mod plan;
mod simulate;
mod sweep;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use serde::Serialize;

use crate::config::load_config;
use crate::exit::{code_for, Failure};
use crate::simulate::SimulateOptions;
use crate::sweep::{FirstAxis, Range};

#[derive(Debug, Parser)]
#[command(name = "pruw", version, about = "Private read-update-write with heterogeneous storage")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Plan storage for a configuration and print the plan report as JSON.
    Plan {
        config: PathBuf,
        /// Write the report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Install the plan, run sessions and report measured costs.
    Simulate {
        config: PathBuf,
        #[arg(long, default_value_t = 5)]
        sessions: u64,
        /// Also run the index, update and security probes for every code
        /// class of the plan.
        #[arg(long)]
        probe: bool,
        /// Field modulus for the probes (defaults to the config's `probe_q`,
        /// then `q`).
        #[arg(long)]
        probe_q: Option<u64>,
        /// Samples per condition when a probe cannot enumerate.
        #[arg(long, default_value_t = pruw_core::sim::DEFAULT_SAMPLES)]
        probe_samples: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Tabulate C1, C2 and the chosen mixture over a grid of (k, p).
    Sweep {
        /// Coding parameter range `start:end:step`.
        #[arg(long, default_value = "2.7", conflicts_with = "mu_range")]
        k_range: String,
        /// Largest storage fraction range; sets `k = 1/mu`.
        #[arg(long)]
        mu_range: Option<String>,
        /// Total storage range `start:end:step`.
        #[arg(long, default_value = "4.3")]
        p_range: String,
        /// Write CSV here instead of stdout.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Tabulate the single-code cost C_T(a, b) for fixed a over b.
    Curve {
        #[arg(long)]
        a: u64,
        #[arg(long)]
        b_range: String,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?)),
        None => Box::new(std::io::stdout().lock()),
    })
}

fn write_json<T: Serialize>(value: &T, path: Option<&Path>) -> Result<()> {
    let mut out = output(path)?;
    serde_json::to_writer_pretty(&mut out, value)?;
    out.write_all(b"\n")?;
    out.flush()?;
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Plan { config, out } => {
            let cfg = load_config(&config)?;
            let report = plan::cmd_plan(&cfg)?;
            write_json(&report, out.as_deref())
        }
        Command::Simulate { config, sessions, probe, probe_q, probe_samples, out } => {
            let cfg = load_config(&config)?;
            let opts = SimulateOptions {
                sessions,
                probe: probe || cfg.probe,
                probe_q: probe_q.or(cfg.probe_q),
                probe_samples,
            };
            let report = simulate::cmd_simulate(&cfg, opts)?;
            write_json(&report, out.as_deref())?;
            let failures = report.failures();
            if failures.is_empty() {
                Ok(())
            } else {
                Err(Failure::Correctness(failures.join("; ")).into())
            }
        }
        Command::Sweep { k_range, mu_range, p_range, csv } => {
            let (first, axis) = match mu_range {
                Some(m) => (Range::parse("mu-range", &m)?, FirstAxis::MaxMu),
                None => (Range::parse("k-range", &k_range)?, FirstAxis::K),
            };
            let p = Range::parse("p-range", &p_range)?;
            let rows = sweep::write_sweep(output(csv.as_deref())?, &first, axis, &p)?;
            log::info!("wrote {rows} sweep rows");
            Ok(())
        }
        Command::Curve { a, b_range, csv } => {
            let b = Range::parse("b-range", &b_range)?;
            let rows = sweep::write_curve(output(csv.as_deref())?, a, &b)?;
            log::info!("wrote {rows} curve rows");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("PRUW_LOG", "warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(code_for(&err))
        }
    }
}
