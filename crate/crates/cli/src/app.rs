//! The `herd` command line.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use herding_core::sim::{SimConfig, Simulation};

use crate::batch::{parse_seeds, run_batch, BatchError};
use crate::export::{export_run, ExportError, OutcomeReport};
use crate::scenario::{load_scenario, ScenarioError};
use crate::snapshot::{emit_snapshots, SnapshotError};

#[derive(Debug, Parser)]
#[command(
    name = "herd",
    version,
    about = "Escort an attacker into a target region with a defender formation"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate one scenario.
    Run {
        scenario: PathBuf,
        /// Override the attacker seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Write trajectory.csv and outcome.json here.
        #[arg(long)]
        export_dir: Option<PathBuf>,
        /// Comma-separated snapshot times in seconds.
        #[arg(long, value_delimiter = ',')]
        snapshots: Vec<f64>,
    },
    /// Run a scenario over a range of seeds and print a JSON summary.
    Batch {
        scenario: PathBuf,
        /// `a..b`, `a..=b` or a comma-separated list.
        #[arg(long)]
        seeds: String,
    },
    /// Parse and validate a scenario.
    Validate { scenario: PathBuf },
    /// Print the derived formation and escort parameters.
    Params { scenario: PathBuf },
}

/// Error with the process exit code it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub const INVALID: u8 = 1;
    pub const RUN: u8 = 2;
    pub const IO: u8 = 3;

    fn new(code: u8, message: impl Into<String>) -> Self {
        Failure {
            code,
            message: message.into(),
        }
    }
}

impl From<ScenarioError> for Failure {
    fn from(e: ScenarioError) -> Self {
        let code = match e {
            ScenarioError::Io { .. } => Failure::IO,
            _ => Failure::INVALID,
        };
        Failure::new(code, e.to_string())
    }
}

impl From<ExportError> for Failure {
    fn from(e: ExportError) -> Self {
        Failure::new(Failure::IO, e.to_string())
    }
}

impl From<SnapshotError> for Failure {
    fn from(e: SnapshotError) -> Self {
        let code = match e {
            SnapshotError::Io(_) => Failure::IO,
            _ => Failure::INVALID,
        };
        Failure::new(code, e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::new(Failure::IO, e.to_string())
    }
}

fn load(path: &PathBuf) -> Result<SimConfig, Failure> {
    Ok(load_scenario(path)?)
}

fn cmd_run(
    scenario: PathBuf,
    seed: Option<u64>,
    export_dir: Option<PathBuf>,
    snapshots: Vec<f64>,
    out: &mut dyn Write,
) -> Result<(), Failure> {
    let mut config = load(&scenario)?;
    if let Some(seed) = seed {
        config.attacker.seed = seed;
    }
    let sim = Simulation::new(config.clone()).map_err(|e| Failure::new(Failure::INVALID, e.to_string()))?;
    let derived = *sim.derived();
    let (log, outcome) = sim.run().map_err(|e| Failure::new(Failure::RUN, e.to_string()))?;

    let report = OutcomeReport::new(&config, &derived, &outcome);
    if let Some(dir) = &export_dir {
        export_run(dir, &log, &report)?;
    }
    if !snapshots.is_empty() {
        let dir = export_dir.clone().unwrap_or_else(|| PathBuf::from("."));
        emit_snapshots(&log, &config, &snapshots, &dir)?;
    }
    serde_json::to_writer_pretty(&mut *out, &report).map_err(|e| Failure::new(Failure::IO, e.to_string()))?;
    writeln!(out)?;
    if outcome.succeeded() {
        Ok(())
    } else {
        Err(Failure::new(
            Failure::RUN,
            format!(
                "run ended in stage {} at t = {:.2} s",
                outcome.stage.label(),
                outcome.t_end
            ),
        ))
    }
}

fn cmd_batch(scenario: PathBuf, seeds: &str, out: &mut dyn Write) -> Result<(), Failure> {
    let config = load(&scenario)?;
    let seeds = parse_seeds(seeds).map_err(|e| Failure::new(Failure::INVALID, e))?;
    let (summary, timing) = run_batch(&config, &seeds).map_err(|e| match e {
        BatchError::NoSeeds => Failure::new(Failure::INVALID, e.to_string()),
        BatchError::Run { .. } => Failure::new(Failure::RUN, e.to_string()),
    })?;
    serde_json::to_writer_pretty(&mut *out, &summary).map_err(|e| Failure::new(Failure::IO, e.to_string()))?;
    writeln!(out)?;
    eprintln!("{} runs in {:.2} s", summary.runs, timing.wall.as_secs_f64());
    if summary.successes == summary.runs {
        Ok(())
    } else {
        Err(Failure::new(
            Failure::RUN,
            format!("{}/{} runs reached the target", summary.successes, summary.runs),
        ))
    }
}

fn cmd_params(scenario: PathBuf, out: &mut dyn Write) -> Result<(), Failure> {
    let config = load(&scenario)?;
    let d = config
        .validate()
        .map_err(|e| Failure::new(Failure::INVALID, e.to_string()))?;
    let f = &d.formation;
    writeln!(out, "eps_D        {:.6}", f.eps_d)?;
    writeln!(out, "eps_B        {:.6}", f.eps_b)?;
    writeln!(out, "V_B          {:.6}", d.beacon_bound)?;
    writeln!(
        out,
        "speed ratio  {:.6} (V_A/V_D, needs < alpha_hat = {})",
        d.speed_ratio, config.formation.alpha_hat
    )?;
    writeln!(out, "feasible     yes")?;
    Ok(())
}

/// Runs a parsed command, writing its normal output to `out`.
pub fn execute(cli: Cli, out: &mut dyn Write) -> Result<(), Failure> {
    match cli.command {
        Command::Run {
            scenario,
            seed,
            export_dir,
            snapshots,
        } => cmd_run(scenario, seed, export_dir, snapshots, out),
        Command::Batch { scenario, seeds } => cmd_batch(scenario, &seeds, out),
        Command::Validate { scenario } => {
            load(&scenario)?;
            writeln!(out, "{}: ok", scenario.display())?;
            Ok(())
        }
        Command::Params { scenario } => cmd_params(scenario, out),
    }
}

pub fn main_with_args(args: impl IntoIterator<Item = std::ffi::OsString>) -> ExitCode {
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(Failure::INVALID)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let stdout = std::io::stdout();
    match execute(cli, &mut stdout.lock()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
