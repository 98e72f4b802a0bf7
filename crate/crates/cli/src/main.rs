//! `crossfit`: inscribed regular crosspolytopes from the command line.
//!
//! Exit codes: 0 success, 1 input error, 2 no solution or stuck,
//! 3 degeneration.

mod commands;
mod export;
mod json;
mod manifest;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use crossfit::configuration::ResidualForm;
use serde_json::Value;

use commands::{Outcome, EXIT_INPUT};
use manifest::{ExportFormat, RunManifest, RunOptions};

#[derive(Debug, Parser)]
#[command(name = "crossfit", version, about = "Find regular crosspolytopes inscribed in smooth bodies")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Residual form used by the solver.
    #[arg(long, global = true, default_value = "levelset")]
    form: ResidualForm,
    /// Number of multi-start seeds.
    #[arg(long, global = true, default_value_t = 32)]
    seeds: usize,
    /// Base seed of the multi-start.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Residual tolerance of the solver; for verify and export, the surface
    /// defect tolerance of the audit (default 1e-10 and 1e-9).
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Relative singular-value cutoff for null directions.
    #[arg(long, global = true, default_value_t = 1e-6)]
    rank_threshold: f64,
    /// Number of sweep steps.
    #[arg(long, global = true, default_value_t = 50)]
    steps: usize,
    /// Sweep step length in chart coordinates.
    #[arg(long, global = true, default_value_t = 0.05)]
    step_size: f64,
    /// Export format.
    #[arg(long, global = true, value_enum, default_value = "json")]
    format: ExportFormat,
    /// Oracle samples per full turn of each Euler angle.
    #[arg(long, global = true, default_value_t = 24)]
    grid_euler: usize,
    /// Oracle samples per center coordinate.
    #[arg(long, global = true, default_value_t = 9)]
    grid_center: usize,
    /// Oracle scale samples.
    #[arg(long, global = true, default_value_t = 17)]
    grid_scale: usize,
    /// Write the result to this file instead of standard output.
    #[arg(short, long, global = true)]
    output: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Multi-start search on one body.
    Solve { body: PathBuf },
    /// Track a solution along the blend from START to END.
    Continue {
        start: PathBuf,
        end: PathBuf,
        /// Start from this configuration instead of a multi-start solution.
        #[arg(long)]
        solution: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        index: usize,
    },
    /// Walk the solution family through a solution.
    Sweep {
        body: PathBuf,
        /// Start from this configuration instead of a multi-start solution.
        #[arg(long)]
        solution: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        index: usize,
    },
    /// Brute-force grid search followed by refinement (d = 3).
    Oracle { body: PathBuf },
    /// Audit a configuration against a body.
    Verify {
        body: PathBuf,
        solution: PathBuf,
        /// Entry of a `solutions` array to use.
        #[arg(long, default_value_t = 0)]
        index: usize,
    },
    /// Write the crosspolytope and a body mesh (obj, d = 3) or vertex data (json).
    Export {
        solution: PathBuf,
        body: PathBuf,
        #[arg(long, default_value_t = 0)]
        index: usize,
    },
    /// Rerun the command recorded in a report.
    Replay { report: PathBuf },
}

fn read_json(path: &Path) -> Result<Value> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("{} is not valid JSON", path.display()))
}

fn read_config(path: &Path, index: usize) -> Result<Value> {
    json::select_config(&read_json(path)?, index).with_context(|| path.display().to_string())
}

fn options(cli: &Cli, audit: bool) -> RunOptions {
    let mut o = RunOptions::default();
    o.form = cli.form;
    o.solve.seed_count = cli.seeds;
    o.solve.seed = cli.seed;
    o.solve.rank_threshold = cli.rank_threshold;
    match (cli.tol, audit) {
        (Some(t), true) => o.verify_tol = t,
        (Some(t), false) => o.solve.residual_tol = t,
        (None, _) => {}
    }
    o.steps = cli.steps;
    o.step_size = cli.step_size;
    o.format = cli.format;
    o.grid.euler_resolution = cli.grid_euler;
    o.grid.center_resolution = cli.grid_center;
    o.grid.scale_resolution = cli.grid_scale;
    o
}

fn manifest(cli: &Cli) -> Result<RunManifest> {
    let m = match &cli.command {
        Command::Solve { body } => RunManifest::new("solve", vec![read_json(body)?], None, options(cli, false)),
        Command::Continue { start, end, solution, index } => RunManifest::new(
            "continue",
            vec![read_json(start)?, read_json(end)?],
            solution.as_deref().map(|p| read_config(p, *index)).transpose()?,
            options(cli, false),
        ),
        Command::Sweep { body, solution, index } => RunManifest::new(
            "sweep",
            vec![read_json(body)?],
            solution.as_deref().map(|p| read_config(p, *index)).transpose()?,
            options(cli, false),
        ),
        Command::Oracle { body } => RunManifest::new("oracle", vec![read_json(body)?], None, options(cli, false)),
        Command::Verify { body, solution, index } => RunManifest::new(
            "verify",
            vec![read_json(body)?],
            Some(read_config(solution, *index)?),
            options(cli, true),
        ),
        Command::Export { solution, body, index } => RunManifest::new(
            "export",
            vec![read_json(body)?],
            Some(read_config(solution, *index)?),
            options(cli, true),
        ),
        Command::Replay { .. } => unreachable!("replay has no manifest of its own"),
    };
    Ok(m)
}

fn configure_threads() -> Result<()> {
    let Ok(raw) = std::env::var("CROSSFIT_THREADS") else {
        return Ok(());
    };
    let n: usize = raw.trim().parse().with_context(|| format!("CROSSFIT_THREADS must be a positive integer, got `{raw}`"))?;
    if n == 0 {
        bail!("CROSSFIT_THREADS must be a positive integer, got 0");
    }
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    Ok(())
}

fn execute(cli: &Cli) -> Result<Outcome> {
    configure_threads()?;
    match &cli.command {
        Command::Replay { report } => {
            let text = fs::read_to_string(report).with_context(|| format!("cannot read {}", report.display()))?;
            commands::replay(&text)
        }
        _ => commands::run(&manifest(cli)?),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_INPUT } else { 0 });
        }
    };
    let outcome = execute(&cli).and_then(|out| {
        match &cli.output {
            Some(path) => fs::write(path, &out.text).with_context(|| format!("cannot write {}", path.display()))?,
            None => print!("{}", out.text),
        }
        Ok(out.exit)
    });
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_INPUT)
        }
    }
}
