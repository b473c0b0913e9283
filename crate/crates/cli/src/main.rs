//! Batch front end for the quantum sensor localization experiments.
//!
//! One dispatcher handles every subcommand:
//!
//! * `gen-data` materializes training datasets as JSON lines.
//! * `build-pgm` constructs the measurement for a discrimination scheme.
//! * `train` fits the learned-scheme models and records loss curves.
//! * `eval` runs the full localization experiment and writes results.
//! * `sweep` repeats eval across grid sizes or sensor counts.
//! * `inspect` re-validates persisted artifacts.
//!
//! Exit codes: 0 success, 1 invalid configuration or failed inspection,
//! 2 runtime failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use qloc::artifacts::{artifact_path, load_artifact};
use qloc::config::load_config;
use qloc::inspect::inspect_artifact;
use qloc::runner::{cmd_build_pgm, cmd_eval, cmd_gen_data, cmd_sweep, cmd_train, Ctx};
use qloc::{CliError, Logger};

use qloc_core::geometry::{deploy_sensors, make_grid};
use qloc_core::harness::HarnessError;
use qloc_core::sensing::SensingConfig;

/// Quantum sensor network localization: simulate, train, evaluate.
#[derive(Debug, Parser)]
#[command(name = "qloc", version, about)]
struct Cli {
    /// Experiment configuration (JSON). Required by every subcommand
    /// except inspect with explicit artifact paths.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Override a config field, e.g. --set grid.n=4 (repeatable).
    #[arg(long, global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,

    /// Output directory (created if missing).
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    /// Override the experiment seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Cap the number of worker threads for evaluation.
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Suppress progress output.
    #[arg(long, global = true, conflicts_with = "verbose")]
    quiet: bool,

    /// Print extra progress detail.
    #[arg(long, global = true)]
    verbose: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate the training datasets for the configured scheme.
    GenData,
    /// Build the pretty good measurement for a discrimination scheme.
    BuildPgm,
    /// Train the parameterized-circuit models for a learned scheme.
    Train,
    /// Evaluate localization over the whole grid and write results.
    Eval,
    /// Evaluate every combination in the config's sweep section.
    Sweep,
    /// Re-validate persisted artifacts (paths, or the configured one).
    Inspect {
        /// Artifact files to check; defaults to the artifact implied by
        /// --config.
        paths: Vec<PathBuf>,
    },
}

fn require_config(cli: &Cli) -> Result<&PathBuf, CliError> {
    cli.config.as_ref().ok_or_else(|| {
        CliError::Validation(String::from("--config <FILE> is required for this command"))
    })
}

fn cmd_inspect(cli: &Cli, paths: &[PathBuf], log: &Logger) -> Result<(), CliError> {
    let mut targets: Vec<PathBuf> = paths.to_vec();
    if targets.is_empty() {
        // Fall back to the artifact the current config would use.
        let path = require_config(cli)?;
        let file = load_config(path, &cli.set, cli.seed)?;
        let resolved = qloc::config::resolve(&file);
        let exp = resolved.exp;
        exp.validate()?;
        let fp = qloc::artifacts::fingerprint(&exp, &SensingConfig::default());
        let candidate = artifact_path(&cli.out.join("cache"), exp.scheme, &fp);
        if !candidate.exists() {
            return Err(CliError::Validation(format!(
                "no artifact at {} for this configuration; run build-pgm or train first",
                candidate.display()
            )));
        }
        targets.push(candidate);
    }
    let mut failures = 0usize;
    for path in &targets {
        let artifact = load_artifact(path)?;
        let report = inspect_artifact(&artifact);
        if log.level >= 0 {
            println!("{}:", path.display());
        }
        for check in &report {
            if log.level >= 0 {
                let tag = if check.passed { "[pass]" } else { "[FAIL]" };
                println!("  {tag} {}: {}", check.name, check.detail);
            }
            if !check.passed {
                failures += 1;
            }
        }
    }
    if failures > 0 {
        return Err(CliError::Validation(format!("{failures} inspection check(s) failed")));
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let log = Logger::new(cli.quiet, cli.verbose);
    if let Command::Inspect { paths } = &cli.command {
        return cmd_inspect(cli, paths, &log);
    }
    let path = require_config(cli)?;
    let file = load_config(path, &cli.set, cli.seed)?;
    let ctx = Ctx { out: cli.out.clone(), threads: cli.threads, log };

    // Fail fast on infeasible geometry before any heavy work.
    if let Command::GenData | Command::BuildPgm | Command::Train | Command::Eval = cli.command {
        let resolved = qloc::config::resolve(&file);
        resolved.exp.validate()?;
        let grid = make_grid(resolved.exp.grid_n).map_err(HarnessError::from)?;
        deploy_sensors(&grid, resolved.exp.sensors).map_err(HarnessError::from)?;
    }

    match &cli.command {
        Command::GenData => cmd_gen_data(&file, &ctx),
        Command::BuildPgm => cmd_build_pgm(&file, &ctx),
        Command::Train => cmd_train(&file, &ctx),
        Command::Eval => cmd_eval(&file, &ctx),
        Command::Sweep => cmd_sweep(&file, &ctx),
        Command::Inspect { .. } => unreachable!("handled above"),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
