//! `irm`: exact LRU miss rates and partial coupon-collection times.
//!
//! Exit status: 0 on success, 1 when `verify` finds a discrepancy above the
//! tolerance, 2 on usage or configuration errors.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use irm_core::CapacityRange;
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "irm", version, about)]
pub struct RunConfig {
    #[command(subcommand)]
    pub command: Command,

    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,

    /// Write the report to `<dir>/<command>.<format>` instead of stdout.
    #[arg(long, global = true, env = "IRM_OUT_DIR")]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SimKind {
    Lru,
    Ccp,
}

impl SimKind {
    fn as_str(self) -> &'static str {
        match self {
            SimKind::Lru => "lru",
            SimKind::Ccp => "ccp",
        }
    }
}

#[derive(Debug, Args)]
pub struct DistArg {
    /// Distribution as inline JSON (`{"type":"zipf","m":16,"alpha":1.0}`) or
    /// a path to a file holding it.
    #[arg(long)]
    pub dist: String,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Miss-rate curve by King's formula and the hit-rate sum.
    Mr {
        #[command(flatten)]
        dist: DistArg,
        /// Capacities, e.g. `2` or `1..3` (inclusive). Defaults to 1..m.
        #[arg(long)]
        j: Option<CapacityRange>,
        /// Evaluate in exact rational arithmetic (m <= 12).
        #[arg(long)]
        rational: bool,
    },
    /// Expected partial-collection times by every available formula.
    Ccp {
        #[command(flatten)]
        dist: DistArg,
        /// Collection sizes. Defaults to 0..m.
        #[arg(long)]
        j: Option<CapacityRange>,
        /// Evaluate the subset table in exact rational arithmetic (m <= 12).
        #[arg(long)]
        rational: bool,
    },
    /// Check the King / hit-rate identity, the integral oracle and the
    /// brute-force sums; exits 1 on any failure.
    Verify {
        #[command(flatten)]
        dist: DistArg,
        /// Largest capacity checked. Defaults to m - 1.
        #[arg(long)]
        jmax: Option<usize>,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
    },
    /// Monte Carlo estimate next to the exact value.
    Simulate {
        #[command(flatten)]
        dist: DistArg,
        #[arg(long, value_enum, default_value_t = SimKind::Lru)]
        kind: SimKind,
        /// Cache capacity (lru) or collection size (ccp).
        #[arg(long)]
        j: usize,
        /// Measured accesses (lru) or trials (ccp).
        #[arg(long, default_value_t = 1_000_000)]
        samples: usize,
        /// Minimum warmup accesses for lru; defaults to 10·m.
        #[arg(long)]
        warmup: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Dump one layer of the I_J table.
    Itable {
        #[command(flatten)]
        dist: DistArg,
        /// Subset size of the layer.
        #[arg(long)]
        k: usize,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Mr { .. } => "mr",
            Command::Ccp { .. } => "ccp",
            Command::Verify { .. } => "verify",
            Command::Simulate { .. } => "simulate",
            Command::Itable { .. } => "itable",
        }
    }
}

fn main() -> ExitCode {
    let config = RunConfig::parse();
    match commands::run(&config) {
        Ok(()) => ExitCode::SUCCESS,
        Err(commands::Failure::Verification(msg)) => {
            eprintln!("verification failed: {msg}");
            ExitCode::from(1)
        }
        Err(commands::Failure::Config(err)) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}
