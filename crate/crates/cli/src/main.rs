//! `nullframe`: run scenario files and built-in examples through the
//! verification pipeline.
//!
//! Exit status: 0 when every verdict passes, 1 when a verification fails,
//! 2 on parse errors and scenario invariant violations.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use nullframe::scenario::{self, CheckSelection, RunOptions, Scenario};
use nullframe::selftest::run_selftest;

const SEED_VAR: &str = "NULLFRAME_SEED";

#[derive(Parser)]
#[command(name = "nullframe", version, about = "Radiation structures on null hypersurfaces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file or a built-in scenario by name.
    Run {
        /// Path to a JSON scenario, or the name of a built-in.
        scenario: String,
        /// Write the report here instead of standard output.
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Number of sample points (default: the scenario's own count).
        #[arg(long)]
        samples: Option<usize>,
        /// Overrides NULLFRAME_SEED and the scenario's own seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Multiplies every upper tolerance.
        #[arg(long, default_value_t = 1.0)]
        tol_scale: f64,
        /// `all` or a comma-separated list of checks.
        #[arg(long)]
        check: Option<String>,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// List the built-in scenarios.
    ListScenarios,
    /// Describe a built-in scenario.
    Describe { name: String },
    /// Run acceptance criteria 1 to 7.
    Selftest {
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
}

/// A failure carrying its exit status.
struct Failure(u8, String);

impl From<nullframe::Error> for Failure {
    fn from(e: nullframe::Error) -> Self {
        Failure(2, e.to_string())
    }
}

fn env_seed() -> Result<Option<u64>, Failure> {
    match std::env::var(SEED_VAR) {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| Failure(2, format!("{SEED_VAR}={v:?} is not an unsigned integer"))),
        Err(_) => Ok(None),
    }
}

fn load(spec: &str, seed: Option<u64>) -> Result<Scenario, Failure> {
    let path = Path::new(spec);
    if path.is_file() {
        let text = std::fs::read_to_string(path).map_err(|e| Failure(2, format!("{}: {e}", path.display())))?;
        return Ok(Scenario::from_json(&text)?);
    }
    Ok(scenario::builtin(spec, seed.unwrap_or(scenario::DEFAULT_SEED))?)
}

fn emit(text: &str, output: Option<&Path>) -> Result<(), Failure> {
    match output {
        Some(p) => std::fs::write(p, text).map_err(|e| Failure(2, format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn execute(cli: Cli) -> Result<u8, Failure> {
    match cli.command {
        Command::Run {
            scenario: spec,
            output,
            samples,
            seed,
            tol_scale,
            check,
            format,
        } => {
            let seed = seed.or(env_seed()?);
            let s = load(&spec, seed)?;
            let opts = RunOptions {
                samples,
                seed,
                tol_scale,
                checks: match check {
                    Some(c) => CheckSelection::parse(&c)?,
                    None => CheckSelection::Default,
                },
            };
            let report = scenario::run(&s, &opts)?;
            let text = match format {
                Format::Text => report.to_text(),
                Format::Json => report.to_json() + "\n",
            };
            emit(&text, output.as_deref())?;
            if output.is_some() {
                print!("{}", report.to_text());
            }
            Ok(if report.passed { 0 } else { 1 })
        }
        Command::ListScenarios => {
            for (name, summary) in scenario::builtin_names() {
                println!("{name:<22} {summary}");
            }
            Ok(0)
        }
        Command::Describe { name } => {
            print!("{}", scenario::describe(&name)?);
            Ok(0)
        }
        Command::Selftest { seed, format } => {
            let seed = seed.or(env_seed()?).unwrap_or(scenario::DEFAULT_SEED);
            let report = run_selftest(seed);
            match format {
                Format::Text => print!("{}", report.to_text()),
                Format::Json => println!(
                    "{}",
                    serde_json::to_string_pretty(&report).map_err(|e| Failure(2, e.to_string()))?
                ),
            }
            Ok(if report.passed() { 0 } else { 1 })
        }
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(Failure(code, msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}
