//! `rssb`: simulate RSS traces of a breathing person, estimate the
//! breathing rate, score the estimates and regenerate figure data.

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;
mod config;
mod figures;
mod manifest;
mod plot;

/// Bad input from the command line or a config file; exits with status 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

#[derive(Parser)]
#[command(name = "rssb", version, about = "RSS breathing-rate simulation and estimation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
pub struct Common {
    /// JSON config file; built-in defaults when absent.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Override a config field, e.g. `--set gp.n_harmonics=3`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub sets: Vec<String>,
    /// Output file (or directory for `figures`).
    #[arg(long, short)]
    pub out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize a multi-channel trace from a scenario file.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Replaces the scenario's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Write absolute RSS in dBm instead of dB relative to the baseline.
        #[arg(long)]
        absolute: bool,
    },
    /// Run one estimator on one channel of a trace file.
    Estimate {
        trace: PathBuf,
        /// dft, kf or gp.
        #[arg(long, short)]
        method: String,
        /// Channel id; the lowest one in the file when absent.
        #[arg(long)]
        channel: Option<usize>,
        /// Also write the periodogram of every window (dft only).
        #[arg(long)]
        spectrogram: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Score an estimate file against the trace it came from.
    Evaluate {
        estimates: PathBuf,
        trace: PathBuf,
        /// True breathing frequency in Hz.
        #[arg(long)]
        f_true: f64,
        /// Series to score when the file holds several methods.
        #[arg(long, short)]
        method: Option<String>,
        #[arg(long)]
        channel: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// Hit ratio against SNR for every method over a grid of seeds.
    Sweep {
        /// Scenario used as template; the bed-like reference when absent.
        #[arg(long)]
        template: Option<PathBuf>,
        /// Added to every seed of the grid.
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads; all cores when absent.
        #[arg(long)]
        jobs: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// Write figure data (CSV) and plots (SVG) into a directory.
    Figures {
        /// fig2c, fig3a, fig3b, fig6c or all.
        #[arg(default_value = "all")]
        names: Vec<String>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        jobs: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Simulate { common, seed, absolute } => commands::simulate(&common, seed, absolute),
        Command::Estimate {
            trace,
            method,
            channel,
            spectrogram,
            common,
        } => commands::estimate(&common, &trace, &method, channel, spectrogram.as_deref()),
        Command::Evaluate {
            estimates,
            trace,
            f_true,
            method,
            channel,
            common,
        } => commands::evaluate(&common, &estimates, &trace, f_true, method.as_deref(), channel),
        Command::Sweep {
            template,
            seed,
            jobs,
            common,
        } => commands::sweep(&common, template.as_deref(), seed, jobs),
        Command::Figures {
            names,
            seed,
            jobs,
            common,
        } => figures::run(&common, &names, seed, jobs),
    }
}

/// 2 for bad input, 1 for anything that failed while computing.
fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<UsageError>() {
            return 2;
        }
        if let Some(e) = cause.downcast_ref::<rssb_core::Error>() {
            return if e.is_validation() { 2 } else { 1 };
        }
    }
    1
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
