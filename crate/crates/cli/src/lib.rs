//! Command-line front end: `simulate`, `constants`, `study` and `presets`.
//!
//! Exit codes: 0 on success, 2 for configuration or validation errors, 1 for
//! runtime failures (divergence, non-convergence, a failed required gate).

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

pub mod commands;
pub mod config;
pub mod output;

pub use config::{OutputConfig, Overrides, RunConfig};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("validation error: {0}")]
    Validation(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn io(path: &Path, e: std::io::Error) -> Self {
        Self::Runtime(format!("{}: {e}", path.display()))
    }

    pub fn csv(path: &Path, e: csv::Error) -> Self {
        Self::Runtime(format!("{}: {e}", path.display()))
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) | Self::Validation(_) => 2,
            Self::Runtime(_) => 1,
        }
    }
}

impl From<coevolve::Error> for CliError {
    fn from(e: coevolve::Error) -> Self {
        use coevolve::Error as E;
        match e {
            E::Validation(_) | E::Dimension { .. } | E::Antisymmetry { .. } | E::Alignment(_) => {
                Self::Validation(e.to_string())
            }
            E::Divergence { .. } | E::NonConvergence { .. } | E::InsufficientData { .. } => {
                Self::Runtime(e.to_string())
            }
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "coevolve",
    version,
    about = "Mass transport on co-evolving weighted graphs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, clap::Args)]
struct RunArgs {
    /// TOML run file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides `integrator.dt`.
    #[arg(long)]
    dt: Option<f64>,
    /// Write weights every k-th trajectory row; 0 omits them.
    #[arg(long)]
    eta_stride: Option<usize>,
}

impl RunArgs {
    fn load(&self) -> Result<RunConfig, CliError> {
        RunConfig::load(
            &self.config,
            &Overrides {
                seed: self.seed,
                dt: self.dt,
                eta_stride: self.eta_stride,
            },
        )
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Integrate one scenario and write trajectory, audit and summary.
    Simulate(RunArgs),
    /// Estimate the structural constants and report the contraction window.
    Constants(RunArgs),
    /// Run a convergence study over a ladder of parameters.
    Study {
        kind: commands::StudyArg,
        #[command(flatten)]
        run: RunArgs,
        /// Worker threads for the rungs; 0 uses all cores.
        #[arg(long, default_value_t = 0)]
        jobs: usize,
    },
    /// Built-in scenarios.
    Presets {
        #[command(subcommand)]
        action: PresetAction,
    },
}

#[derive(Debug, Subcommand)]
enum PresetAction {
    List,
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Simulate(a) => commands::simulate(&a.load()?, &a.out),
        Command::Constants(a) => commands::constants(&a.load()?, &a.out),
        Command::Study { kind, run, jobs } => commands::study(kind, &run.load()?, &run.out, jobs),
        Command::Presets {
            action: PresetAction::List,
        } => {
            commands::presets_list();
            Ok(())
        }
    }
}

/// Parses `args` (program name first) and runs the command. Returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
