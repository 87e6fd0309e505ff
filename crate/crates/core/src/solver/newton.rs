//! Globalized Newton iteration on the (optionally deflated) residual.
//!
//! With deflation factor `M(x) = Π_i (‖x - x_i‖^{-q} + s)` the deflated
//! Newton step reduces to the plain step `δ` rescaled by
//! `1/(1 - ∇ln M · δ)`.
//!
//! The first half of the iteration budget takes full Newton steps, which
//! cross the kinks and jumps of the example nonlinearities far better than
//! any monotone scheme. The second half restarts from the best iterate and
//! only accepts steps that decrease the merit `M²‖r‖²`: backtracking on the
//! Newton step, then Levenberg–Marquardt steps on the deflated Jacobian.

use nalgebra::{DMatrix, DVector};

use crate::energy::{hessian, residual, ProblemSpec};
use crate::grid::GridFunction;

use super::SolverConfig;

/// Components closer than this to a jump of `f` or `g` are pinned to the
/// jump when an unpinned solve stalls.
const SNAP_RADIUS: f64 = 1e-3;
const LM_TRIES: usize = 12;

#[derive(Debug, Clone)]
pub(crate) struct SolveOutcome {
    /// Iterate with the smallest raw residual.
    pub best: Vec<f64>,
    pub best_residual: f64,
    pub converged: bool,
}

struct Deflation<'a> {
    known: &'a [GridFunction],
    power: f64,
    shift: f64,
}

impl Deflation<'_> {
    /// `(ln M(x), ∇ ln M(x))`, with the Euclidean norm on interior values.
    fn eval(&self, x: &[f64]) -> (f64, DVector<f64>) {
        let mut log_m = 0.0;
        let mut grad = DVector::zeros(x.len());
        for root in self.known {
            let e: Vec<f64> = x.iter().zip(root.interior()).map(|(a, b)| a - b).collect();
            let n2: f64 = e.iter().map(|v| v * v).sum();
            if n2 == 0.0 {
                return (f64::INFINITY, grad);
            }
            let norm = n2.sqrt();
            let inv = norm.powf(-self.power);
            let factor = inv + self.shift;
            log_m += factor.ln();
            // d/dx ln(‖e‖^{-q} + s) = -q ‖e‖^{-q-2} e / (‖e‖^{-q} + s)
            let coef = -self.power * inv / (n2 * factor);
            for (g, v) in grad.iter_mut().zip(&e) {
                *g += coef * v;
            }
        }
        (log_m, grad)
    }
}

fn raw_residual(spec: &ProblemSpec, x: &[f64]) -> Vec<f64> {
    residual(&GridFunction::from_interior(x).expect("finite iterate"), spec)
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, a| m.max(a.abs()))
}

/// Newton on the components where `free` is true; the others stay fixed.
/// Convergence requires the full raw residual below `certify_tol`.
fn solve_masked(
    spec: &ProblemSpec,
    x0: &[f64],
    known: &[GridFunction],
    cfg: &SolverConfig,
    free: &[bool],
) -> SolveOutcome {
    let defl = Deflation {
        known,
        power: cfg.deflation_power,
        shift: cfg.deflation_shift,
    };
    let idx: Vec<usize> = (0..x0.len()).filter(|&i| free[i]).collect();
    let n = idx.len();
    let mut x = x0.to_vec();
    let mut r = raw_residual(spec, &x);
    let mut best = x.clone();
    let mut best_residual = inf_norm(&r);
    let mut mu: Option<f64> = None;
    let merit = |r: &[f64], log_m: f64| -> f64 {
        let s: f64 = idx.iter().map(|&i| r[i] * r[i]).sum();
        // M²‖r‖² in log form to stay finite near known roots
        2.0 * log_m + s.ln()
    };
    let (log_m, mut w) = defl.eval(&x);
    let mut phi = merit(&r, log_m);

    let free_steps = cfg.max_newton_iters / 2;
    for it in 0..cfg.max_newton_iters {
        if it == free_steps && free_steps > 0 {
            x = best.clone();
            r = raw_residual(spec, &x);
            let (lm, wn) = defl.eval(&x);
            w = wn;
            phi = merit(&r, lm);
        }
        if best_residual <= cfg.certify_tol {
            return SolveOutcome { best, best_residual, converged: true };
        }
        if n == 0 || phi.is_nan() {
            break;
        }
        let full_h = hessian(&GridFunction::from_interior(&x).expect("finite iterate"), spec);
        let jac = DMatrix::from_fn(n, n, |a, b| full_h[(idx[a], idx[b])]);
        let rf = DVector::from_iterator(n, idx.iter().map(|&i| r[i]));
        let wf = DVector::from_iterator(n, idx.iter().map(|&i| w[i]));

        let try_step = |delta: &DVector<f64>, scale: f64| -> Option<(Vec<f64>, Vec<f64>, DVector<f64>, f64)> {
            let mut cand = x.clone();
            for (a, &i) in idx.iter().enumerate() {
                cand[i] += scale * delta[a];
            }
            if cand.iter().any(|v| !v.is_finite()) {
                return None;
            }
            let rc = raw_residual(spec, &cand);
            let (lm, wc) = defl.eval(&cand);
            let ph = merit(&rc, lm);
            let ok = ph < phi || (it < free_steps && scale == 1.0 && ph < f64::INFINITY);
            (ok && !ph.is_nan()).then_some((cand, rc, wc, ph))
        };

        let mut accepted = None;
        if let Some(dn) = jac.clone().lu().solve(&(-&rf)) {
            let denom = 1.0 - wf.dot(&dn);
            if dn.iter().all(|v| v.is_finite()) && denom.abs() > 1e-12 {
                let delta = dn / denom;
                let mut scale = 1.0;
                for _ in 0..12 {
                    if let Some(s) = try_step(&delta, scale) {
                        accepted = Some(s);
                        break;
                    }
                    scale *= 0.5;
                }
            }
        }
        if accepted.is_none() {
            // Levenberg–Marquardt on A = J + r ∇ln Mᵀ
            let a = &jac + &rf * wf.transpose();
            let ata = a.transpose() * &a;
            let atr = a.transpose() * &rf;
            let diag_max = (0..n).fold(0.0f64, |m, i| m.max(ata[(i, i)]));
            let mut damp = mu.unwrap_or(1e-3 * diag_max.max(1e-12));
            for _ in 0..LM_TRIES {
                let mut sys = ata.clone();
                for i in 0..n {
                    sys[(i, i)] += damp;
                }
                if let Some(delta) = sys.cholesky().map(|c| c.solve(&(-&atr))) {
                    if let Some(s) = try_step(&delta, 1.0) {
                        accepted = Some(s);
                        damp /= 3.0;
                        break;
                    }
                }
                damp *= 4.0;
            }
            mu = Some(damp);
        }
        let Some((xn, rn, wn, ph)) = accepted else { break };
        x = xn;
        r = rn;
        w = wn;
        phi = ph;
        let res = inf_norm(&r);
        if res < best_residual {
            best_residual = res;
            best = x.clone();
        }
    }
    SolveOutcome {
        converged: best_residual <= cfg.certify_tol,
        best,
        best_residual,
    }
}

/// Newton from `x0`, deflated against `known`. If the iteration stalls
/// next to a jump of `f` or `g`, the offending components are pinned to the
/// jump and the remaining ones solved for.
pub(crate) fn solve(spec: &ProblemSpec, x0: &[f64], known: &[GridFunction], cfg: &SolverConfig) -> SolveOutcome {
    let all = vec![true; x0.len()];
    let out = solve_masked(spec, x0, known, cfg, &all);
    if out.converged {
        return out;
    }
    let mut jumps = spec.fterm().discontinuities();
    jumps.extend(spec.gterm().discontinuities());
    if jumps.is_empty() {
        return out;
    }
    let mut pinned = out.best.clone();
    let mut free = all;
    for (v, f) in pinned.iter_mut().zip(free.iter_mut()) {
        if let Some(&j) = jumps.iter().find(|&&j| (*v - j).abs() <= SNAP_RADIUS) {
            *v = j;
            *f = false;
        }
    }
    if free.iter().all(|&f| f) {
        return out;
    }
    let snapped = solve_masked(spec, &pinned, known, cfg, &free);
    if snapped.converged || snapped.best_residual < out.best_residual {
        snapped
    } else {
        out
    }
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::energy::{residual_inf_norm, ExponentProfile};
    use crate::nonlinearity::{example1_pair, CubicTerm, GVariant, ZeroTerm};

    fn cubic(t: usize) -> ProblemSpec {
        ProblemSpec::new(
            ExponentProfile::constant(t, 2.0).unwrap(),
            Arc::new(CubicTerm),
            Arc::new(ZeroTerm),
            1.0,
            1.0,
        )
        .unwrap()
    }

    #[test]
    fn converges_on_one_dimensional_cubic() {
        // 2x + x³ - x = 0 has the single real root 0
        let spec = cubic(1);
        let out = solve(&spec, &[0.7], &[], &SolverConfig::default());
        assert!(out.converged);
        assert!(out.best[0].abs() < 1e-10);
    }

    #[test]
    fn deflation_finds_a_second_root() {
        let spec = cubic(2);
        let cfg = SolverConfig::default();
        let first = solve(&spec, &[0.1, 0.1], &[], &cfg);
        assert!(first.converged);
        let root = GridFunction::from_interior(&first.best).unwrap();
        let second = solve(&spec, &[0.1, 0.1], std::slice::from_ref(&root), &cfg);
        if second.converged {
            let x = GridFunction::from_interior(&second.best).unwrap();
            assert!(x.sup_distance(&root) > cfg.dedup_tol);
            assert!(residual_inf_norm(&x, &spec) <= cfg.certify_tol);
        }
    }

    #[test]
    fn pinning_reaches_points_on_the_jump() {
        // T = 3: antisymmetric solutions (a, 0, -a) exist because g(0) = 0
        let (f, g) = example1_pair(GVariant::CorrectedOddG, vec![1.0; 3], vec![1.0; 3]).unwrap();
        let spec = ProblemSpec::new(ExponentProfile::constant(3, 2.0).unwrap(), f, g, 0.2, 1.0).unwrap();
        let cfg = SolverConfig::default();
        let out = solve_masked(&spec, &[0.05, 0.0, -0.05], &[], &cfg, &[true, false, true]);
        assert!(out.converged, "{out:?}");
        assert_eq!(out.best[1], 0.0);
        assert!((out.best[0] + out.best[2]).abs() < 1e-12);
        assert!(out.best[0] > 0.0);
    }
}
