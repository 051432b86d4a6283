//! `smlm`: simulate, encode, decode and evaluate localization datasets.
//!
//! Exit codes: 0 success, 1 invalid input or arguments, 2 filesystem errors.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "smlm", version, about = "Single-molecule localization simulation and evaluation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Settings shared by every subcommand. Precedence: preset, then config
/// file, then these flags.
#[derive(Debug, Args, Clone, Default)]
pub struct Common {
    /// Named preset (AI-1 .. AI-9, AI-AS, AI-DH).
    #[arg(long)]
    pub preset: Option<String>,
    /// Run configuration file (`key = value` lines).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Master random seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads; 0 uses every core. Results do not depend on it.
    #[arg(long, default_value_t = 0)]
    pub workers: usize,
    /// Override any configuration key, e.g. `--set sim.density=2`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

#[derive(Debug, Subcommand)]
pub(crate) enum Command {
    /// Simulate frames and ground truth into a directory.
    Simulate {
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        frames: Option<u64>,
        #[arg(long)]
        density: Option<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// Write complex map pairs for a simulated directory.
    Encode {
        /// Simulation directory; maps go to its `maps/` subdirectory.
        #[arg(long)]
        data: PathBuf,
        /// Emit noisy decoder-like maps instead of exact targets.
        #[arg(long)]
        noisy: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Decode the maps of a directory into a seed list.
    Decode {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Match predictions against ground truth and report metrics.
    Evaluate {
        #[arg(long)]
        gt: PathBuf,
        #[arg(long)]
        pred: PathBuf,
        /// Write the report here as well as to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Simulate, decode and evaluate each density until the metrics converge.
    Sweep {
        /// Comma-separated densities (emitters/µm²); defaults to the standard ten.
        #[arg(long, value_delimiter = ',')]
        densities: Vec<f64>,
        /// Use exact target maps instead of the noisy decoder stand-in.
        #[arg(long)]
        exact: bool,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Score seeds and remove the worst, or trace metrics against filter rate.
    Filter {
        #[arg(long)]
        pred: PathBuf,
        /// Ground truth; needed for `--rates` and for oracle scores.
        #[arg(long)]
        gt: Option<PathBuf>,
        /// `proxy` (from decoder features) or `oracle` (true error).
        #[arg(long, default_value = "proxy")]
        score: String,
        /// Comma-separated rates; writes a metrics curve.
        #[arg(long, value_delimiter = ',', conflicts_with_all = ["rate", "threshold"])]
        rates: Vec<f64>,
        /// Remove this fraction of seeds and write the survivors.
        #[arg(long, conflicts_with = "threshold")]
        rate: Option<f64>,
        /// Keep seeds scoring at most this and write them.
        #[arg(long)]
        threshold: Option<f64>,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Render a seed list as a PNG histogram.
    Render {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Side view of the slab `axis,center,thickness`, e.g. `y,2000,100`.
        #[arg(long)]
        slice: Option<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Track metric convergence against the number of decoded seeds.
    Residuals {
        #[arg(long)]
        exact: bool,
        /// Checkpoint table (CSV).
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        common: Common,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_io() { 2 } else { 1 })
        }
    }
}
