//! Command-line front end for the B92 simulator.
//!
//! Exit codes: 0 success, 1 validation error, 2 I/O error, 3 fixture
//! mismatch in the `table1` self-check.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use qkd_sim::harness::{
    self, human_summary, records_csv, stats_csv, sweep, table1_config, SessionConfig, StatsRow,
    SweepAxis, TABLE1_EXPECTED_CLICKS, TABLE1_EXPECTED_KEY, TABLE1_EXPECTED_POSITIONS,
};
use qkd_sim::protocol::run_session;

/// Seed override honored when no --seed flag is given.
const SEED_ENV_VAR: &str = "QKD_SIM_SEED";

#[derive(Parser)]
#[command(
    name = "qkd-sim",
    about = "Monte-Carlo simulator of a phase-encoded B92 quantum key distribution link"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one session and print a summary.
    Run {
        /// Path to a JSON session config.
        #[arg(long)]
        config: PathBuf,
        /// Seed override (precedence: this flag, then QKD_SIM_SEED, then the
        /// config file).
        #[arg(long)]
        seed: Option<u64>,
        /// Write the session stats as a one-row CSV.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write the per-pulse records CSV.
        #[arg(long)]
        records: Option<PathBuf>,
    },
    /// Re-run a base config across a range of fiber lengths or pulse
    /// energies and emit a stats CSV.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Swept parameter: length_km or mu.
        #[arg(long)]
        axis: String,
        /// Comma-separated sweep values.
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        values: Vec<f64>,
        /// Independent sessions per value.
        #[arg(long, default_value_t = 1)]
        trials: u32,
        /// Write the CSV here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Replay the built-in eight-pulse fixture and verify the sifted key.
    Table1,
}

enum CliError {
    Validation(String),
    Io(String),
    FixtureMismatch(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Io(_) => 2,
            CliError::FixtureMismatch(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Validation(m) | CliError::Io(m) | CliError::FixtureMismatch(m) => m,
        }
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {}", err.message());
            ExitCode::from(err.exit_code())
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run {
            config,
            seed,
            out,
            records,
        } => cmd_run(&config, seed, out.as_deref(), records.as_deref()),
        Command::Sweep {
            config,
            axis,
            values,
            trials,
            out,
        } => cmd_sweep(&config, &axis, &values, trials, out.as_deref()),
        Command::Table1 => cmd_table1(),
    }
}

fn load_config(path: &Path) -> Result<SessionConfig, CliError> {
    SessionConfig::load(path).map_err(|err| match err {
        harness::config::LoadError::Io { .. } => CliError::Io(err.to_string()),
        harness::config::LoadError::Invalid(e) => CliError::Validation(e.to_string()),
    })
}

/// Seed precedence: CLI flag, then QKD_SIM_SEED, then the config file.
fn apply_seed_override(cfg: &mut SessionConfig, flag: Option<u64>) -> Result<(), CliError> {
    if let Some(seed) = flag {
        cfg.seed = seed;
        return Ok(());
    }
    if let Ok(text) = std::env::var(SEED_ENV_VAR) {
        let seed = text.parse::<u64>().map_err(|_| {
            CliError::Validation(format!(
                "{SEED_ENV_VAR}: must be an unsigned 64-bit integer (got `{text}`)"
            ))
        })?;
        cfg.seed = seed;
    }
    Ok(())
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents)
        .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
}

fn cmd_run(
    config_path: &Path,
    seed: Option<u64>,
    out: Option<&Path>,
    records_out: Option<&Path>,
) -> Result<(), CliError> {
    let mut cfg = load_config(config_path)?;
    apply_seed_override(&mut cfg, seed)?;
    let output = run_session(&cfg).map_err(|e| CliError::Validation(e.to_string()))?;

    print!("{}", human_summary(&output.stats));

    if let Some(path) = out {
        let row = StatsRow {
            axis_value: None,
            trial: 0,
            seed: cfg.seed,
            stats: output.stats.clone(),
        };
        write_file(path, &stats_csv(std::slice::from_ref(&row)))?;
    }
    if let Some(path) = records_out {
        write_file(path, &records_csv(&output.records))?;
    }
    Ok(())
}

fn cmd_sweep(
    config_path: &Path,
    axis: &str,
    values: &[f64],
    trials: u32,
    out: Option<&Path>,
) -> Result<(), CliError> {
    let mut cfg = load_config(config_path)?;
    apply_seed_override(&mut cfg, None)?;
    let axis: SweepAxis = axis.parse().map_err(CliError::Validation)?;
    let rows =
        sweep(&cfg, axis, values, trials).map_err(|e| CliError::Validation(e.to_string()))?;
    let csv = stats_csv(&rows);
    match out {
        Some(path) => write_file(path, &csv)?,
        None => print!("{csv}"),
    }
    Ok(())
}

fn cmd_table1() -> Result<(), CliError> {
    let cfg = table1_config();
    let output = run_session(&cfg).map_err(|e| CliError::Validation(e.to_string()))?;

    print!("{}", records_csv(&output.records));
    let key = output.bob_key.bit_string();
    println!("sifted key: {key}");
    println!(
        "positions: {}",
        output
            .bob_key
            .positions
            .iter()
            .map(|p| p.to_string())
            .collect::<Vec<_>>()
            .join(",")
    );

    let clicks: Vec<bool> = output.records.iter().map(|r| r.clicks.t2).collect();
    if clicks != TABLE1_EXPECTED_CLICKS
        || key != TABLE1_EXPECTED_KEY
        || output.bob_key.positions != TABLE1_EXPECTED_POSITIONS
    {
        return Err(CliError::FixtureMismatch(format!(
            "table1 replay diverged: key `{key}` at {:?}",
            output.bob_key.positions
        )));
    }
    Ok(())
}
