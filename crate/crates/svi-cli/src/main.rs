//! `svi` — command-line runner for inclusion-constrained convex programs.
//!
//! Every invocation loads a JSON config, runs one analysis (or `run-all` for
//! every configured one), writes CSV artifacts plus a `run.json` summary into
//! the output directory, and prints one line per task.
//!
//! Exit codes: 0 on success, 2 for configuration problems, 3 when at least
//! one task failed at runtime.

mod config;
mod tasks;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use sha2::{Digest, Sha256};

use config::ConfigError;
use tasks::{RunContext, TaskResult, TaskStatus};

#[derive(Parser)]
#[command(
    name = "svi",
    version,
    about = "Analyses of convex programs with set-valued inclusion constraints",
    after_help = "The SVI_SEED environment variable overrides --seed when set."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Distance of a single point to the feasible region.
    Feasibility(RunArgs),
    /// Optimal value and argmin over a one-parameter grid.
    ValueGrid(RunArgs),
    /// Exact subdifferential of the value function at the configured points.
    Subdiff(RunArgs),
    /// Analytic increase certificate for the constraint map.
    IncreaseCert(RunArgs),
    /// Residual-versus-distance error bound sweep.
    AuditErrorBound(RunArgs),
    /// Exact-penalty threshold by bisection on the penalized solutions.
    Penalty(RunArgs),
    /// Sampled calmness bound of the value function.
    Calmness(RunArgs),
    /// Sampled subregularity constant of the constraint residual.
    Subreg(RunArgs),
    /// Every configured task, in canonical order, continuing past failures.
    RunAll(RunArgs),
}

impl Command {
    fn selection(&self) -> Option<&'static str> {
        match self {
            Command::Feasibility(_) => Some("feasibility"),
            Command::ValueGrid(_) => Some("value-grid"),
            Command::Subdiff(_) => Some("subdiff"),
            Command::IncreaseCert(_) => Some("increase-cert"),
            Command::AuditErrorBound(_) => Some("audit-error-bound"),
            Command::Penalty(_) => Some("penalty"),
            Command::Calmness(_) => Some("calmness"),
            Command::Subreg(_) => Some("subreg"),
            Command::RunAll(_) => None,
        }
    }

    fn args(&self) -> &RunArgs {
        match self {
            Command::Feasibility(a)
            | Command::ValueGrid(a)
            | Command::Subdiff(a)
            | Command::IncreaseCert(a)
            | Command::AuditErrorBound(a)
            | Command::Penalty(a)
            | Command::Calmness(a)
            | Command::Subreg(a)
            | Command::RunAll(a) => a,
        }
    }
}

#[derive(Args)]
struct RunArgs {
    /// JSON problem description.
    #[arg(long)]
    config: PathBuf,
    /// Output directory for CSV artifacts and run.json.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Seed for the sampled analyses (calmness, subreg).
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Override the base parameter point, comma separated (point tasks only).
    #[arg(long, allow_hyphen_values = true)]
    p: Option<String>,
    /// Worker threads for grid solves.
    #[arg(long, default_value_t = 1)]
    threads: usize,
}

#[derive(Serialize)]
struct RunSummary<'a> {
    version: &'static str,
    config_digest: String,
    seed: u64,
    wall_ms: u128,
    tasks: &'a [TaskResult],
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(3),
        Err(err) => {
            eprintln!("{err}");
            ExitCode::from(2)
        }
    }
}

fn run(command: &Command) -> Result<bool, ConfigError> {
    let args = command.args();
    let started = Instant::now();
    let (config, raw) = config::load(&args.config)?;
    let instance = config.build_instance()?;
    let seed = match std::env::var("SVI_SEED") {
        Ok(text) => text
            .parse::<u64>()
            .map_err(|_| ConfigError::Task(format!("SVI_SEED is not a valid seed: {text:?}")))?,
        Err(_) => args.seed,
    };
    let p_override = args
        .p
        .as_deref()
        .map(parse_point)
        .transpose()
        .map_err(ConfigError::Task)?;
    let ctx = RunContext {
        instance: &instance,
        tasks: &config.tasks,
        out_dir: &args.out,
        seed,
        threads: args.threads,
        p_override,
    };
    let results = tasks::run(&ctx, command.selection())?;
    for task in &results {
        match (&task.status, &task.quantity, &task.error) {
            (TaskStatus::Ok, Some(q), _) => {
                println!("task {}: ok ({} = {:.6e})", task.name, q.name, q.value)
            }
            (TaskStatus::Ok, None, _) => println!("task {}: ok", task.name),
            (TaskStatus::Error, _, Some(message)) => {
                println!("task {}: error ({message})", task.name)
            }
            (TaskStatus::Error, _, None) => println!("task {}: error", task.name),
        }
    }
    let summary = RunSummary {
        version: env!("CARGO_PKG_VERSION"),
        config_digest: format!("{:x}", Sha256::digest(&raw)),
        seed,
        wall_ms: started.elapsed().as_millis(),
        tasks: &results,
    };
    let summary_text = serde_json::to_string_pretty(&summary)
        .map_err(|e| ConfigError::Task(format!("cannot serialize run summary: {e}")))?;
    std::fs::write(ctx.out_dir.join("run.json"), summary_text + "\n")
        .map_err(|e| ConfigError::Task(format!("cannot write run.json: {e}")))?;
    Ok(results
        .iter()
        .all(|task| matches!(task.status, TaskStatus::Ok)))
}

fn parse_point(text: &str) -> Result<Vec<f64>, String> {
    text.split(',')
        .map(|part| {
            part.trim()
                .parse::<f64>()
                .map_err(|_| format!("--p entry {part:?} is not a number"))
        })
        .collect()
}
