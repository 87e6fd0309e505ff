//! Parameter-plane sweeps and their CSV/JSON reports.

mod spec_file;

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constants::{compute_constants, TheoremConstants, DEFAULT_R_FRACTION};
use crate::energy::ProblemSpec;
use crate::error::ReportError;
use crate::solver::{deflated_multistart_with_diagnostics, CriticalPoint, MultistartDiagnostics, SolverConfig};

pub use spec_file::{parse_spec, parse_spec_str, Coefficients, ExponentField, ParsedSpec, Preset, SpecFile};

pub const CSV_HEADER: &str =
    "gamma,lambda,n_critical,n_nontrivial,min_energy,max_energy,theorem_consistent,n_failed_starts";

/// A cell agrees with the multiplicity result when it has at least this many
/// certified points, at least [`MIN_NONTRIVIAL`] of them nontrivial.
pub const MIN_CRITICAL: usize = 3;
pub const MIN_NONTRIVIAL: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Csv,
    Json,
}

impl FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            _ => Err(format!("unknown format `{s}`, expected csv or json")),
        }
    }
}

impl fmt::Display for ReportFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ReportFormat::Csv => "csv",
            ReportFormat::Json => "json",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub gamma: f64,
    pub lambda: f64,
    pub gamma_index: usize,
    pub lambda_index: usize,
    /// Seed handed to the multistart solver for this cell.
    pub seed: u64,
    pub n_critical: usize,
    pub n_nontrivial: usize,
    pub min_energy: Option<f64>,
    pub max_energy: Option<f64>,
    pub theorem_consistent: bool,
    pub diagnostics: MultistartDiagnostics,
    /// Set when the solver returned an error for this cell.
    pub error: Option<String>,
    pub points: Vec<CriticalPoint>,
}

impl SweepCell {
    fn from_points(
        (gamma_index, gamma): (usize, f64),
        (lambda_index, lambda): (usize, f64),
        seed: u64,
        result: Result<(Vec<CriticalPoint>, MultistartDiagnostics), String>,
    ) -> Self {
        let (points, diagnostics, error) = match result {
            Ok((p, d)) => (p, d, None),
            Err(e) => (Vec::new(), MultistartDiagnostics::default(), Some(e)),
        };
        let n_nontrivial = points.iter().filter(|c| !c.is_trivial).count();
        let energies = points.iter().map(|c| c.energy_value);
        SweepCell {
            gamma,
            lambda,
            gamma_index,
            lambda_index,
            seed,
            n_critical: points.len(),
            n_nontrivial,
            min_energy: energies.clone().reduce(f64::min),
            max_energy: energies.reduce(f64::max),
            theorem_consistent: points.len() >= MIN_CRITICAL && n_nontrivial >= MIN_NONTRIVIAL,
            diagnostics,
            error,
            points,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepMetadata {
    pub seed: u64,
    pub certify_tol: f64,
    pub dedup_tol: f64,
    pub trivial_tol: f64,
    pub version: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    /// The problem file, when the sweep was started from one.
    pub spec: Option<SpecFile>,
    pub config: SolverConfig,
    pub constants: Option<TheoremConstants>,
    /// Why `constants` is missing.
    pub constants_error: Option<String>,
    pub gamma_grid: Vec<f64>,
    pub lambda_grid: Vec<f64>,
    /// Row-major in (gamma, lambda) grid order.
    pub cells: Vec<SweepCell>,
    pub metadata: SweepMetadata,
    /// The only field that differs between identical runs.
    pub wall_time_seconds: f64,
}

impl SweepReport {
    pub fn consistent_cells(&self) -> usize {
        self.cells.iter().filter(|c| c.theorem_consistent).count()
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Per-cell seed, a function of the sweep seed and the cell's grid indices
/// only.
pub fn cell_seed(seed: u64, gamma_index: usize, lambda_index: usize) -> u64 {
    splitmix64(splitmix64(splitmix64(seed) ^ gamma_index as u64) ^ lambda_index as u64)
}

/// Parses `a:b:n` into `n` evenly spaced values from `a` to `b` inclusive.
/// Both ends must be positive; `n = 1` gives `[a]`.
pub fn parse_grid(s: &str) -> Result<Vec<f64>, ReportError> {
    let bad = || ReportError::Grid(s.to_string());
    let parts: Vec<&str> = s.split(':').collect();
    let [a, b, n] = parts.as_slice() else { return Err(bad()) };
    let a: f64 = a.trim().parse().map_err(|_| bad())?;
    let b: f64 = b.trim().parse().map_err(|_| bad())?;
    let n: usize = n.trim().parse().map_err(|_| bad())?;
    if n == 0 || !(a > 0.0) || !(b > 0.0) || !a.is_finite() || !b.is_finite() {
        return Err(bad());
    }
    if n == 1 {
        return Ok(vec![a]);
    }
    Ok((0..n)
        .map(|i| if i + 1 == n { b } else { a + (b - a) * i as f64 / (n - 1) as f64 })
        .collect())
}

fn check_axis(name: &str, values: &[f64]) -> Result<(), ReportError> {
    if values.is_empty() {
        return Err(ReportError::Field {
            field: name.into(),
            message: "grid is empty".into(),
        });
    }
    if let Some(v) = values.iter().find(|v| !(**v > 0.0) || !v.is_finite()) {
        return Err(ReportError::Field {
            field: name.into(),
            message: format!("grid values must be positive and finite, got {v}"),
        });
    }
    Ok(())
}

/// Runs [`deflated_multistart_with_diagnostics`] on every `(γ, λ)` cell in
/// parallel. Cell `(i, j)` uses seed [`cell_seed`]`(cfg.seed, i, j)`, so the
/// report does not depend on thread count. Solver failures are recorded in
/// the cell instead of aborting the sweep.
pub fn run_sweep(
    template: &ProblemSpec,
    gammas: &[f64],
    lambdas: &[f64],
    cfg: &SolverConfig,
) -> Result<SweepReport, ReportError> {
    cfg.validate()?;
    check_axis("gamma", gammas)?;
    check_axis("lambda", lambdas)?;
    let started = Instant::now();
    let (constants, constants_error) = match compute_constants(template, DEFAULT_R_FRACTION) {
        Ok(c) => (Some(c), None),
        Err(e) => (None, Some(e.to_string())),
    };

    let cells: Vec<SweepCell> = (0..gammas.len() * lambdas.len())
        .into_par_iter()
        .map(|idx| {
            let (gi, li) = (idx / lambdas.len(), idx % lambdas.len());
            let seed = cell_seed(cfg.seed, gi, li);
            let cell_cfg = SolverConfig { seed, ..cfg.clone() };
            let result = template
                .with_params(gammas[gi], lambdas[li])
                .map_err(|e| e.to_string())
                .and_then(|spec| deflated_multistart_with_diagnostics(&spec, &cell_cfg).map_err(|e| e.to_string()));
            SweepCell::from_points((gi, gammas[gi]), (li, lambdas[li]), seed, result)
        })
        .collect();

    Ok(SweepReport {
        spec: None,
        config: cfg.clone(),
        constants,
        constants_error,
        gamma_grid: gammas.to_vec(),
        lambda_grid: lambdas.to_vec(),
        cells,
        metadata: SweepMetadata {
            seed: cfg.seed,
            certify_tol: cfg.certify_tol,
            dedup_tol: cfg.dedup_tol,
            trivial_tol: cfg.trivial_tol,
            version: env!("CARGO_PKG_VERSION").to_string(),
        },
        wall_time_seconds: started.elapsed().as_secs_f64(),
    })
}

fn csv_number(v: Option<f64>) -> String {
    v.map(|v| format!("{v:.16e}")).unwrap_or_default()
}

/// One row per cell, sorted by (gamma, lambda). Floats carry 17
/// significant digits, flags are 0/1 and a missing energy is an empty field.
pub fn to_csv(report: &SweepReport) -> String {
    let mut cells: Vec<&SweepCell> = report.cells.iter().collect();
    cells.sort_by(|a, b| a.gamma.total_cmp(&b.gamma).then(a.lambda.total_cmp(&b.lambda)));
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for c in cells {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            csv_number(Some(c.gamma)),
            csv_number(Some(c.lambda)),
            c.n_critical,
            c.n_nontrivial,
            csv_number(c.min_energy),
            csv_number(c.max_energy),
            u8::from(c.theorem_consistent),
            c.diagnostics.n_failed_starts,
        ));
    }
    out
}

pub fn to_json(report: &SweepReport) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("report serializes");
    s.push('\n');
    s
}

pub fn render(report: &SweepReport, format: ReportFormat) -> String {
    match format {
        ReportFormat::Csv => to_csv(report),
        ReportFormat::Json => to_json(report),
    }
}

pub fn emit_report(report: &SweepReport, format: ReportFormat, path: &Path) -> Result<(), ReportError> {
    fs::write(path, render(report, format)).map_err(|source| ReportError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Reads a JSON report written by [`emit_report`].
pub fn read_report(path: &Path) -> Result<SweepReport, ReportError> {
    let text = fs::read_to_string(path).map_err(|source| ReportError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|e| ReportError::Parse {
        path: path.to_path_buf(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })
}
