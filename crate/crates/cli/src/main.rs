//! `lbgame`: run static and dynamic load-balancing games from the command line.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use lbgame_core::dynamic::{SimultaneousRule, UpdateMode};
use lbgame_core::trace::TraceFormat;
use lbgame_core::GameError;

use config::{parse_format, parse_mode, parse_rule, OrderArg};

#[derive(Debug, Parser)]
#[command(name = "lbgame", version, about = "Load-balancing games: best responses, equilibria and queue dynamics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// One pass of sequential best responses from the uniform profile.
    Static(StaticArgs),
    /// Best-response dynamics with queue carryover.
    Dynamic(DynamicArgs),
    /// Price-of-anarchy bound against the equilibrium found by one pass.
    Poa(InstanceArgs),
    /// Built-in settings catalog.
    Settings {
        #[command(subcommand)]
        action: SettingsAction,
    },
}

#[derive(Debug, Subcommand)]
enum SettingsAction {
    /// Print every catalog setting with its parameters.
    List,
    /// Run all modes of a setting and export traces plus a manifest.
    Run(SettingsRunArgs),
    /// Sequential convergence time over a grid of player and server counts.
    Grid(GridArgs),
}

#[derive(Debug, Args)]
struct InstanceArgs {
    /// JSON config with `instance`, `run` and `output` blocks.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Catalog setting id (1-7); overrides the config instance.
    #[arg(long)]
    setting: Option<String>,
    /// Seed for every random choice; a fresh one is drawn and printed when omitted.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Args)]
struct StaticArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    /// Update order: round-robin (index order), random, or a file of player indices.
    #[arg(long)]
    order: Option<OrderArg>,
    /// Write the pass (profile, potentials, equilibrium check) as JSON.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct DynamicArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    /// seq or simul.
    #[arg(long, value_parser = parse_mode)]
    mode: Option<UpdateMode>,
    /// Arrival order for seq mode: round-robin, random, or a file of player indices.
    #[arg(long)]
    order: Option<OrderArg>,
    /// Information used in simul mode: stage or previous.
    #[arg(long, value_parser = parse_rule)]
    rule: Option<SimultaneousRule>,
    #[arg(long)]
    max_steps: Option<usize>,
    /// Total load at or below which the system counts as empty.
    #[arg(long)]
    zero_tolerance: Option<f64>,
    /// Trace file; a `.manifest.json` sidecar is written next to it.
    #[arg(long)]
    out: Option<PathBuf>,
    /// csv or jsonl.
    #[arg(long, value_parser = parse_format)]
    format: Option<TraceFormat>,
}

#[derive(Debug, Args)]
struct SettingsRunArgs {
    /// Setting id (1-7).
    id: String,
    #[arg(long)]
    seed: Option<u64>,
    /// Arrival order for the sequential run: round-robin, random, or a file.
    #[arg(long)]
    order: Option<OrderArg>,
    #[arg(long)]
    max_steps: Option<usize>,
    /// Output directory (default `setting-<id>-seed-<seed>`).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_parser = parse_format, default_value = "csv")]
    format: TraceFormat,
    /// Run the setting's modes on up to N threads.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

#[derive(Debug, Args)]
struct GridArgs {
    /// Player and server counts, comma separated.
    #[arg(long, value_delimiter = ',', default_values_t = [20usize, 40, 60, 80])]
    sizes: Vec<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// CSV file with one row per cell.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Evaluate cells on up to N threads.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Failed(String),
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    pub fn failed(msg: impl Into<String>) -> Self {
        CliError::Failed(msg.into())
    }

    fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Usage(_) => ExitCode::from(2),
            CliError::Failed(_) => ExitCode::from(1),
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Failed(m) => m,
        }
    }
}

impl From<GameError> for CliError {
    fn from(err: GameError) -> Self {
        match err {
            GameError::InvalidInstance(_)
            | GameError::InvalidParameter(_)
            | GameError::UnknownSetting(_)
            | GameError::SequentialInfeasible { .. }
            | GameError::SimultaneousInfeasible { .. } => CliError::Usage(err.to_string()),
            _ => CliError::Failed(err.to_string()),
        }
    }
}

fn one_line(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) if !err.use_stderr() => {
            let _ = err.print();
            return ExitCode::SUCCESS;
        }
        Err(err) => {
            let rendered = err.render().to_string();
            let first = rendered.lines().find(|l| !l.trim().is_empty()).unwrap_or("invalid arguments");
            let first = first.trim_start_matches("error: ");
            eprintln!("error: {}", one_line(first));
            return ExitCode::from(2);
        }
    };
    let result = match cli.command {
        Command::Static(args) => commands::static_game(args),
        Command::Dynamic(args) => commands::dynamic(args),
        Command::Poa(args) => commands::poa(args),
        Command::Settings { action: SettingsAction::List } => commands::settings_list(),
        Command::Settings { action: SettingsAction::Run(args) } => commands::settings_run(args),
        Command::Settings { action: SettingsAction::Grid(args) } => commands::settings_grid(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {}", one_line(err.message()));
            err.exit_code()
        }
    }
}
