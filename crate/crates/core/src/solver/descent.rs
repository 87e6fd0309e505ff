use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::energy::{energy, gradient, hessian, residual_inf_norm, ProblemSpec};
use crate::error::SolverError;
use crate::grid::GridFunction;

use super::newton::solve;
use super::{certify, CriticalPoint, SolverConfig};

const ARMIJO: f64 = 1e-4;
const GD_ITERS: usize = 200;
/// Switch from gradient steps to Newton steps below this gradient size.
const GD_SWITCH: f64 = 1e-2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DescentOutcome {
    pub point: CriticalPoint,
    /// Energy after every accepted descent step of the winning run, starting
    /// with the energy at its start.
    pub energy_trace: Vec<f64>,
    /// Index into the sampled starts; `None` for the origin.
    pub start_index: Option<usize>,
}

fn grid(x: &[f64]) -> GridFunction {
    GridFunction::from_interior(x).expect("finite iterate")
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, a| m.max(a.abs()))
}

/// Backtracking along `dir` from `x`; returns the new point and energy if
/// the Armijo condition holds for some step in `1, 1/2, ..., 2^-40`.
fn armijo(spec: &ProblemSpec, x: &[f64], e: f64, grad: &[f64], dir: &[f64]) -> Option<(Vec<f64>, f64)> {
    let slope: f64 = grad.iter().zip(dir).map(|(g, d)| g * d).sum();
    if !(slope < 0.0) {
        return None;
    }
    let mut step = 1.0;
    for _ in 0..40 {
        let cand: Vec<f64> = x.iter().zip(dir).map(|(a, d)| a + step * d).collect();
        if cand.iter().all(|v| v.is_finite()) {
            let ec = energy(&grid(&cand), spec);
            if ec <= e + ARMIJO * step * slope {
                return Some((cand, ec));
            }
        }
        step *= 0.5;
    }
    None
}

/// `-(H + μI)⁻¹ ∇E` with the smallest `μ` in `0, 1e-8·s, 4e-8·s, ...`
/// (`s = 1 + max|H_ii|`) that makes the shifted Hessian positive definite.
fn modified_newton_direction(h: DMatrix<f64>, grad: &[f64]) -> Option<Vec<f64>> {
    let n = grad.len();
    let scale = 1.0 + (0..n).fold(0.0f64, |m, i| m.max(h[(i, i)].abs()));
    let rhs = -DVector::from_column_slice(grad);
    let mut mu = 0.0;
    for _ in 0..40 {
        let mut shifted = h.clone();
        for i in 0..n {
            shifted[(i, i)] += mu;
        }
        if let Some(ch) = shifted.cholesky() {
            let d = ch.solve(&rhs);
            if d.iter().all(|v| v.is_finite()) {
                return Some(d.iter().copied().collect());
            }
        }
        mu = if mu == 0.0 { 1e-8 * scale } else { 4.0 * mu };
    }
    None
}

/// Monotone descent on the energy from `x0`: gradient steps while the
/// gradient is large, then modified Newton steps.
fn descend(spec: &ProblemSpec, x0: &[f64], cfg: &SolverConfig) -> (Vec<f64>, Vec<f64>) {
    let mut x = x0.to_vec();
    let mut e = energy(&grid(&x), spec);
    let mut trace = vec![e];
    for it in 0..GD_ITERS + cfg.max_newton_iters {
        let g = gradient(&grid(&x), spec);
        let gn = inf_norm(&g);
        if gn <= cfg.certify_tol {
            break;
        }
        let newton_phase = it >= GD_ITERS || gn < GD_SWITCH;
        let dir = if newton_phase {
            modified_newton_direction(hessian(&grid(&x), spec), &g)
        } else {
            None
        }
        .unwrap_or_else(|| g.iter().map(|v| -v).collect());
        let step = armijo(spec, &x, e, &g, &dir).or_else(|| {
            // fall back to steepest descent if the Newton direction fails
            let sd: Vec<f64> = g.iter().map(|v| -v).collect();
            armijo(spec, &x, e, &g, &sd)
        });
        let Some((xn, en)) = step else { break };
        x = xn;
        e = en;
        trace.push(e);
    }
    (x, trace)
}

/// The lowest-energy certified point reached by descent from every sampled
/// start and from the origin.
pub fn minimize_coercive(spec: &ProblemSpec, cfg: &SolverConfig) -> Result<CriticalPoint, SolverError> {
    minimize_coercive_traced(spec, cfg).map(|o| o.point)
}

/// Like [`minimize_coercive`], also returning the energy trace of the
/// winning run. Each descent ends with an undeflated Newton polish on the
/// residual; the polish is not part of the monotone trace.
pub fn minimize_coercive_traced(spec: &ProblemSpec, cfg: &SolverConfig) -> Result<DescentOutcome, SolverError> {
    cfg.validate()?;
    spec.require_p_minus_two()?;
    let mut starts: Vec<(Option<usize>, Vec<f64>)> = vec![(None, vec![0.0; spec.len()])];
    starts.extend(cfg.sample_starts(spec).into_iter().enumerate().map(|(i, x)| (Some(i), x)));

    let runs: Vec<(Option<usize>, Vec<f64>, Vec<f64>)> = starts
        .par_iter()
        .map(|(idx, x0)| {
            let (x, trace) = descend(spec, x0, cfg);
            let polished = solve(spec, &x, &[], cfg);
            let end = if polished.converged { polished.best } else { x };
            (*idx, end, trace)
        })
        .collect();

    let mut best: Option<DescentOutcome> = None;
    let mut fallback: Option<(f64, GridFunction)> = None;
    for (start_index, x, energy_trace) in runs {
        let x = grid(&x);
        match certify(x.clone(), spec, cfg) {
            Some(point) => {
                if best.as_ref().is_none_or(|b| point.energy_value < b.point.energy_value) {
                    best = Some(DescentOutcome { point, energy_trace, start_index });
                }
            }
            None => {
                let res = residual_inf_norm(&x, spec);
                if fallback.as_ref().is_none_or(|(r, _)| res < *r) {
                    fallback = Some((res, x));
                }
            }
        }
    }
    best.ok_or_else(|| {
        let (residual, x) = fallback.expect("at least one start");
        SolverError::NonConvergence { best: Box::new(x), residual }
    })
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::energy::ExponentProfile;
    use crate::nonlinearity::{LinearTerm, ZeroTerm};

    #[test]
    fn free_problem_minimizer_is_origin() {
        for p in [2.0, 3.0] {
            let spec = ProblemSpec::new(
                ExponentProfile::constant(4, p).unwrap(),
                Arc::new(ZeroTerm),
                Arc::new(ZeroTerm),
                1.0,
                1.0,
            )
            .unwrap();
            let cp = minimize_coercive(&spec, &SolverConfig { n_starts: 8, ..Default::default() }).unwrap();
            assert!(cp.point.interior().iter().all(|v| *v == 0.0));
            assert_eq!(cp.energy_value, 0.0);
        }
    }

    #[test]
    fn linear_problem_minimizer_is_origin() {
        let spec = ProblemSpec::new(
            ExponentProfile::constant(6, 2.0).unwrap(),
            Arc::new(LinearTerm { slope: 1.0 }),
            Arc::new(ZeroTerm),
            1.0,
            1.0,
        )
        .unwrap();
        let cp = minimize_coercive(&spec, &SolverConfig { n_starts: 4, ..Default::default() }).unwrap();
        assert!(cp.point.interior().iter().all(|v| v.abs() < 1e-10));
    }

    #[test]
    fn trace_is_non_increasing() {
        let spec = ProblemSpec::new(
            ExponentProfile::linear(5, 2.0, 1.0).unwrap(),
            Arc::new(crate::nonlinearity::CubicTerm),
            Arc::new(ZeroTerm),
            1.0,
            4.0,
        )
        .unwrap();
        let out = minimize_coercive_traced(&spec, &SolverConfig { n_starts: 8, ..Default::default() }).unwrap();
        assert!(out.energy_trace.windows(2).all(|w| w[1] <= w[0]));
        assert!(out.point.energy_value < 0.0);
    }
}
