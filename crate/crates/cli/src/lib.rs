//! Command-line runner tying the toolkit's modules into reproducible
//! verification suites with CSV artifacts.
//!
//! Exit codes: 0 on success, 2 when a scientific expectation fails, 3 on
//! usage or configuration errors.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

pub mod commands;
pub mod config;

use config::{parse_config_file, parse_tol_flags, Overrides, RunConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_SCIENTIFIC: i32 = 2;
pub const EXIT_CONFIG: i32 = 3;

#[derive(Parser, Debug)]
#[command(
    name = "fieldlab",
    about = "Verification suites for functionals on smooth periodic fields",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Grid size (power of two, at least 16).
    #[arg(long, global = true)]
    grid: Option<usize>,

    /// Seed for every randomized probe.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Tolerance override, repeatable: NAME=VALUE.
    #[arg(long = "tol", global = true, value_name = "NAME=VALUE")]
    tol: Vec<String>,

    /// Comma-separated suite selection (default: everything).
    #[arg(long, global = true)]
    suite: Option<String>,

    /// Output directory for the CSV artifacts.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Plain-text key=value configuration file; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Analytic vs numeric derivatives over the built-in functionals.
    Derivatives,
    /// Locality verdicts against the expected classification table.
    Locality,
    /// Integral identities: FTC, Poincaré, EL gradient, exactness.
    Identities,
    /// Mollifier estimates, jet determination, k-local probes.
    Peetre {
        /// Comma-separated mollifier widths.
        #[arg(long, value_name = "L1,L2,...")]
        lambda: Option<String>,
    },
    /// The partially-additive-but-not-local counterexample.
    Counterexample {
        /// Exponent N of the glued functional.
        #[arg(long = "n-power")]
        n_power: Option<u32>,
    },
}

/// Parse arguments from the process environment and run. Returns the exit
/// code.
pub fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() {
                EXIT_CONFIG
            } else {
                EXIT_OK // --help / --version
            };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(true) => EXIT_OK,
        Ok(false) => {
            eprintln!("scientific expectation failed; see the CSV artifact");
            EXIT_SCIENTIFIC
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_CONFIG
        }
    }
}

fn execute(cli: Cli) -> fieldlab::Result<bool> {
    let mut cfg = RunConfig::default();
    if let Some(path) = &cli.config {
        let text = std::fs::read_to_string(path)?;
        parse_config_file(&text)?.apply(&mut cfg)?;
    }
    let (lambda, n_power) = match &cli.command {
        Command::Peetre { lambda } => (lambda.clone(), None),
        Command::Counterexample { n_power } => (None, *n_power),
        _ => (None, None),
    };
    let flags = Overrides {
        grid: cli.grid,
        seed: cli.seed,
        out: cli.out.clone(),
        suite: cli.suite.clone(),
        tol: parse_tol_flags(&cli.tol)?,
        n_power,
        lambda,
    };
    flags.apply(&mut cfg)?;

    let outcome = match cli.command {
        Command::Derivatives => commands::cmd_derivatives(&cfg)?,
        Command::Locality => commands::cmd_locality(&cfg)?,
        Command::Identities => commands::cmd_identities(&cfg)?,
        Command::Peetre { .. } => commands::cmd_peetre(&cfg)?,
        Command::Counterexample { .. } => commands::cmd_counterexample(&cfg)?,
    };
    Ok(outcome.clean)
}

/// Exit-code helper for tests.
pub fn exit_code_of(outcome: fieldlab::Result<bool>) -> ExitCode {
    match outcome {
        Ok(true) => ExitCode::from(EXIT_OK as u8),
        Ok(false) => ExitCode::from(EXIT_SCIENTIFIC as u8),
        Err(_) => ExitCode::from(EXIT_CONFIG as u8),
    }
}
