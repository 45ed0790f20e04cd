//! `ghz`: exact predictions, contextual-model simulation, sheet inspection
//! and the non-contextual search for the three-photon GHZ experiment.
//!
//! Exit codes: 0 success, 1 model-check failure, 2 usage error.

mod commands;

use std::io::Write;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ghz_core::{Context, Policy};

#[derive(Debug, Parser)]
#[command(name = "ghz", version, about = "GHZ experiment: predictions, simulation and checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Table,
    #[value(name = "json-like", alias = "json")]
    JsonLike,
    Csv,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print the Born distribution of the GHZ state for one context (or all).
    Predict {
        #[arg(long, value_parser = parse_context)]
        context: Option<Context>,
        #[arg(long, value_enum, default_value = "table")]
        format: Format,
    },
    /// Run the pre-existing-state model and compare with the Born rule.
    Simulate(SimulateArgs),
    /// Exact checks, exhaustive search, example sheet and a simulation in one go.
    Verify {
        /// Runs per context for the round-robin simulation.
        #[arg(long, default_value_t = 100_000, value_parser = parse_runs)]
        runs: u64,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 0.01, value_parser = parse_tolerance)]
        tolerance: f64,
        #[arg(long, value_enum, default_value = "table")]
        format: Format,
    },
    /// Sample one sheet of pre-existing states and validate it.
    Sheet {
        #[arg(long, default_value_t = 7, conflicts_with = "example")]
        seed: u64,
        /// Show the built-in worked example instead of a sampled sheet.
        #[arg(long)]
        example: bool,
        #[arg(long, value_enum, default_value = "table")]
        format: Format,
    },
    /// Exhaustive search over the 64 non-contextual local assignments.
    LhvSearch {
        #[arg(long, value_enum, default_value = "table")]
        format: Format,
    },
    /// Mermin combination: exact quantum value, classical bound and a
    /// simulated estimate with `--runs` runs per Mermin context.
    Mermin {
        #[arg(long, default_value_t = 10_000, value_parser = parse_runs)]
        runs: u64,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, value_enum, default_value = "table")]
        format: Format,
    },
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// Runs per measured context. Round-robin and uniform policies measure
    /// all eight contexts, so they execute eight times this many runs.
    #[arg(long, default_value_t = 100_000, value_parser = parse_runs)]
    runs: u64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// fixed:CTX, uniform or round-robin.
    #[arg(long, default_value = "round-robin", value_parser = parse_policy)]
    policy: Policy,
    /// Total-variation threshold per context.
    #[arg(long, default_value_t = 0.01, value_parser = parse_tolerance)]
    tolerance: f64,
    /// Independent derived streams; the result depends on this value.
    #[arg(long, default_value_t = 1, value_parser = parse_partitions)]
    partitions: u64,
    #[arg(long, value_enum, default_value = "table")]
    format: Format,
}

fn parse_context(s: &str) -> Result<Context, String> {
    s.parse().map_err(|e: ghz_core::Error| e.to_string())
}

fn parse_policy(s: &str) -> Result<Policy, String> {
    s.parse().map_err(|e: ghz_core::Error| e.to_string())
}

fn parse_positive(s: &str, what: &str) -> Result<u64, String> {
    match s.parse::<u64>() {
        Ok(0) => Err(format!("{what} must be at least 1")),
        Ok(n) => Ok(n),
        Err(_) => Err(format!("{s:?} is not a non-negative integer")),
    }
}

fn parse_runs(s: &str) -> Result<u64, String> {
    parse_positive(s, "runs")
}

fn parse_partitions(s: &str) -> Result<u64, String> {
    parse_positive(s, "partitions")
}

fn parse_tolerance(s: &str) -> Result<f64, String> {
    let t: f64 = s.parse().map_err(|_| format!("{s:?} is not a number"))?;
    if t > 0.0 && t < 1.0 {
        Ok(t)
    } else {
        Err(format!("tolerance must lie in (0, 1), got {s}"))
    }
}

/// Rendered command output plus its exit status.
pub struct Output {
    pub text: String,
    pub pass: bool,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Predict { context, format } => Ok(commands::predict(context, format)),
        Command::Simulate(a) => {
            commands::simulate(a.runs, a.seed, a.policy, a.tolerance, a.partitions, a.format)
        }
        Command::Verify { runs, seed, tolerance, format } => {
            commands::verify(runs, seed, tolerance, format)
        }
        Command::Sheet { seed, example, format } => {
            Ok(commands::sheet((!example).then_some(seed), format))
        }
        Command::LhvSearch { format } => Ok(commands::lhv_search(format)),
        Command::Mermin { runs, seed, format } => commands::mermin(runs, seed, format),
    };
    match result {
        Ok(out) => {
            let mut stdout = std::io::stdout().lock();
            let _ = stdout.write_all(out.text.as_bytes());
            let _ = stdout.flush();
            ExitCode::from(if out.pass { 0 } else { 1 })
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
