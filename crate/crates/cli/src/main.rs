//! `senergy`: simulate averaging systems, verify and certify traces, and
//! tabulate bounds.
//!
//! Exit status is 0 on success, 2 when a trace breaks a constraint or the
//! certificate fails, and 1 for usage or input errors.

mod commands;
mod config;
mod table;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::config::Config;
use crate::table::Format;

#[derive(Parser, Debug)]
#[command(name = "senergy", version, about = "Averaging systems: simulation, verification and bounds")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// TOML file with experiment settings
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Directory for traces and reports
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    steps_cap: Option<usize>,
    #[arg(long, global = true)]
    diameter_cutoff: Option<f64>,
    #[arg(long, global = true, value_enum, default_value = "csv")]
    format: Format,
    /// Number of agents
    #[arg(long, global = true)]
    n: Option<usize>,
    #[arg(long, global = true)]
    rho: Option<f64>,
    /// Energy exponents, comma separated
    #[arg(long, global = true, value_delimiter = ',')]
    s: Option<Vec<f64>>,
    /// Link-length thresholds, comma separated
    #[arg(long, global = true, value_delimiter = ',')]
    eps: Option<Vec<f64>>,
    #[arg(long, global = true)]
    trials: Option<usize>,
}

impl Common {
    pub fn resolve(&self) -> anyhow::Result<Config> {
        let mut cfg = match &self.config {
            Some(path) => Config::load(path)?,
            None => Config::default(),
        };
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = self.steps_cap {
            cfg.steps_cap = v;
        }
        if let Some(v) = self.diameter_cutoff {
            cfg.diameter_cutoff = v;
        }
        if let Some(v) = self.n {
            cfg.n = v;
        }
        if let Some(v) = self.rho {
            cfg.rho = v;
        }
        if let Some(v) = &self.s {
            cfg.s = v.clone();
        }
        if let Some(v) = &self.eps {
            cfg.eps = Some(v.clone());
        }
        if let Some(v) = self.trials {
            cfg.trials = v;
        }
        Ok(cfg)
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run seeded trajectories and report energies and communication counts
    Simulate,
    /// Replay a trace and check every step
    Verify { trace: PathBuf },
    /// Split every step of a trace into twist substeps
    Reduce { trace: PathBuf },
    /// Run the credit ledger over a trace
    Certify {
        trace: PathBuf,
        /// Write every pair flow of every clearing pass to this CSV file
        #[arg(long)]
        ledger_csv: Option<PathBuf>,
    },
    /// Tabulate the closed-form upper and lower bounds
    Bounds,
    /// Build the adversarial trajectory and compare its count with both bounds
    Lowerbound,
    /// Box-squeeze opinion dynamics in d dimensions
    Opinion,
    /// Discrete Kuramoto oscillators on random graphs
    Kuramoto,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    finish(run(cli))
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let cfg = cli.common.resolve()?;
    let out = cli.common.out.as_deref();
    let format = cli.common.format;
    match cli.command {
        Command::Simulate => commands::simulate(&cfg, out, format),
        Command::Verify { trace } => commands::verify(&trace),
        Command::Reduce { trace } => commands::reduce(&trace, out),
        Command::Certify { trace, ledger_csv } => {
            commands::certify(&trace, &cfg.s, ledger_csv.as_deref(), out, format)
        }
        Command::Bounds => commands::bounds(&cfg, out, format),
        Command::Lowerbound => commands::lowerbound(&cfg, out, format),
        Command::Opinion => commands::opinion(&cfg, out, format),
        Command::Kuramoto => commands::kuramoto(&cfg, out, format),
    }
}

fn finish(result: anyhow::Result<()>) -> ExitCode {
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<commands::Violation>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
