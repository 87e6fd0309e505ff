use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::energy::ProblemSpec;
use crate::error::SolverError;
use crate::grid::GridFunction;

use super::newton::solve;
use super::{certify, push_unique, sort_points, CriticalPoint, SolverConfig};

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MultistartDiagnostics {
    pub n_starts: usize,
    pub rounds: usize,
    /// Starts whose first (least deflated) solve did not certify.
    pub n_failed_starts: usize,
    /// Certified solves that landed within `dedup_tol` of a known point.
    pub n_duplicates: usize,
    pub n_solves: usize,
}

/// Certified critical points from [`SolverConfig::sample_starts`], plus the
/// origin when it certifies. See [`deflated_multistart_with_diagnostics`].
pub fn deflated_multistart(spec: &ProblemSpec, cfg: &SolverConfig) -> Result<Vec<CriticalPoint>, SolverError> {
    deflated_multistart_with_diagnostics(spec, cfg).map(|(points, _)| points)
}

/// Runs the starts in rounds of `round_size`. Within a round the starts are
/// solved in parallel, each deflated against the points known at the start
/// of the round and against its own earlier finds; a start is re-solved up
/// to `solves_per_start` times while it keeps finding new points. A first
/// solve that fails under deflation is repeated without it. Results are
/// merged in start order, so the output does not depend on scheduling.
pub fn deflated_multistart_with_diagnostics(
    spec: &ProblemSpec,
    cfg: &SolverConfig,
) -> Result<(Vec<CriticalPoint>, MultistartDiagnostics), SolverError> {
    cfg.validate()?;
    let mut diag = MultistartDiagnostics {
        n_starts: cfg.n_starts,
        ..Default::default()
    };
    let mut found: Vec<CriticalPoint> = Vec::new();
    if let Some(origin) = certify(GridFunction::zeros(spec.len()), spec, cfg) {
        found.push(origin);
    }

    let starts = cfg.sample_starts(spec);
    for batch in starts.chunks(cfg.round_size) {
        diag.rounds += 1;
        let known: Vec<GridFunction> = found.iter().map(|c| c.point.clone()).collect();
        let results: Vec<(bool, Vec<GridFunction>, usize)> = batch
            .par_iter()
            .map(|x0| {
                let mut local = known.clone();
                let mut finds = Vec::new();
                let mut first_ok = false;
                let mut solves = 0;
                for attempt in 0..cfg.solves_per_start {
                    solves += 1;
                    let mut out = solve(spec, x0, &local, cfg);
                    if !out.converged && attempt == 0 && !local.is_empty() {
                        // Deflation around tightly clustered roots can block
                        // every path; retry undeflated and let dedup sort it out.
                        solves += 1;
                        out = solve(spec, x0, &[], cfg);
                    }
                    if !out.converged {
                        break;
                    }
                    if attempt == 0 {
                        first_ok = true;
                    }
                    let x = GridFunction::from_interior(&out.best).expect("finite iterate");
                    local.push(x.clone());
                    finds.push(x);
                }
                (first_ok, finds, solves)
            })
            .collect();
        for (first_ok, finds, solves) in results {
            diag.n_solves += solves;
            if !first_ok {
                diag.n_failed_starts += 1;
            }
            for x in finds {
                // re-certified against the undeflated residual
                if let Some(cp) = certify(x, spec, cfg) {
                    if !push_unique(&mut found, cp, cfg.dedup_tol) {
                        diag.n_duplicates += 1;
                    }
                }
            }
        }
    }
    sort_points(&mut found);
    Ok((found, diag))
}
