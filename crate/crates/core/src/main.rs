use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;

use pk_laplace::constants::{compute_constants, DEFAULT_R_FRACTION};
use pk_laplace::error::{ReportError, SolverError};
use pk_laplace::nonlinearity::{verify_assumptions, SamplingConfig, StructuralConstants};
use pk_laplace::report::{emit_report, parse_grid, parse_spec, read_report, render, run_sweep, ReportFormat};
use pk_laplace::solver::{brute_force_oracle, deflated_multistart_with_diagnostics, minimize_coercive};

#[derive(Parser)]
#[command(name = "pk-laplace", version, about = "Critical points of discrete p(k)-Laplacian problems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Deflated multistart plus coercive minimization at the file's (gamma, lambda)
    Solve { spec: PathBuf },
    /// Multistart over a (gamma, lambda) grid
    Sweep {
        spec: PathBuf,
        /// a:b:n, n evenly spaced values from a to b
        #[arg(long)]
        gamma: String,
        #[arg(long)]
        lambda: String,
        #[arg(long, default_value = "csv")]
        format: ReportFormat,
        /// Write here instead of stdout
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sampling checks of the hypotheses on f and g
    Verify { spec: PathBuf },
    /// Constants bounding gamma
    Constants {
        spec: PathBuf,
        #[arg(long, default_value_t = DEFAULT_R_FRACTION)]
        r_fraction: f64,
    },
    /// Exhaustive grid search, T <= 3
    Oracle {
        spec: PathBuf,
        #[arg(long = "box")]
        box_radius: f64,
        #[arg(long)]
        grid: usize,
    },
    /// Convert a JSON sweep report
    Report {
        input: PathBuf,
        #[arg(long)]
        format: ReportFormat,
        #[arg(long)]
        out: PathBuf,
    },
}

enum Failure {
    Validation(String),
    NonConvergence(String),
    Io(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Validation(_) => 1,
            Failure::NonConvergence(_) => 2,
            Failure::Io(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Validation(m) | Failure::NonConvergence(m) | Failure::Io(m) => m,
        }
    }
}

impl From<ReportError> for Failure {
    fn from(e: ReportError) -> Self {
        match e {
            ReportError::Io { .. } => Failure::Io(e.to_string()),
            _ => Failure::Validation(e.to_string()),
        }
    }
}

fn validation(e: impl std::fmt::Display) -> Failure {
    Failure::Validation(e.to_string())
}

fn print_json(value: &impl serde::Serialize) {
    println!("{}", serde_json::to_string_pretty(value).expect("serializable output"));
}

fn solve(path: &Path) -> Result<(), Failure> {
    let parsed = parse_spec(path)?;
    let (points, diagnostics) = deflated_multistart_with_diagnostics(&parsed.spec, &parsed.solver).map_err(validation)?;
    // the coercive minimizer needs p- >= 2
    let minimizer = if parsed.spec.require_p_minus_two().is_ok() {
        match minimize_coercive(&parsed.spec, &parsed.solver) {
            Ok(cp) => Some(cp),
            Err(e @ SolverError::NonConvergence { .. }) => return Err(Failure::NonConvergence(e.to_string())),
            Err(e) => return Err(validation(e)),
        }
    } else {
        None
    };
    print_json(&json!({
        "gamma": parsed.spec.gamma(),
        "lambda": parsed.spec.lambda(),
        "points": points,
        "diagnostics": diagnostics,
        "minimizer": minimizer,
    }));
    if points.is_empty() {
        return Err(Failure::NonConvergence("no critical point certified".into()));
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Solve { spec } => solve(&spec),
        Command::Sweep { spec, gamma, lambda, format, out } => {
            let parsed = parse_spec(&spec)?;
            let gammas = parse_grid(&gamma)?;
            let lambdas = parse_grid(&lambda)?;
            let mut report = run_sweep(&parsed.spec, &gammas, &lambdas, &parsed.solver)?;
            report.spec = Some(parsed.file);
            match out {
                Some(path) => emit_report(&report, format, &path)?,
                None => print!("{}", render(&report, format)),
            }
            eprintln!(
                "{} of {} cells theorem-consistent ({:.2} s)",
                report.consistent_cells(),
                report.cells.len(),
                report.wall_time_seconds
            );
            Ok(())
        }
        Command::Verify { spec } => {
            let parsed = parse_spec(&spec)?;
            let s = &parsed.spec;
            let structural = StructuralConstants::from_terms(s.fterm(), s.gterm()).map_err(validation)?;
            let defaults = SamplingConfig::default();
            let sampling = SamplingConfig {
                range: defaults.range.max(structural.s2).max(structural.m1),
                ..defaults
            };
            let report = verify_assumptions(s.fterm(), s.gterm(), s.len(), s.exponents().p_minus(), &sampling)
                .map_err(validation)?;
            print_json(&report);
            Ok(())
        }
        Command::Constants { spec, r_fraction } => {
            let parsed = parse_spec(&spec)?;
            print_json(&compute_constants(&parsed.spec, r_fraction).map_err(validation)?);
            Ok(())
        }
        Command::Oracle { spec, box_radius, grid } => {
            let parsed = parse_spec(&spec)?;
            let points = brute_force_oracle(&parsed.spec, box_radius, grid, &parsed.solver).map_err(validation)?;
            print_json(&points);
            Ok(())
        }
        Command::Report { input, format, out } => {
            let report = read_report(&input)?;
            emit_report(&report, format, &out)?;
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
